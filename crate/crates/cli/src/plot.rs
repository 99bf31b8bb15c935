use std::fmt::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use endofuse_core::metrics::auc;
use endofuse_core::training::{EpochLog, EPOCH_LOG_HEADER};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn numbers(line: &str, n: usize, file: &str, row: usize) -> Result<Vec<f64>> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != n {
        bail!(
            "{file} row {row}: expected {n} fields, found {}",
            cells.len()
        );
    }
    cells
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let v: f64 = c.trim().parse().map_err(|_| {
                anyhow::anyhow!("{file} row {row}, column {}: {c:?} is not a number", j + 1)
            })?;
            if !v.is_finite() {
                bail!("{file} row {row}, column {}: value is not finite", j + 1);
            }
            Ok(v)
        })
        .collect()
}

/// Reads a training log; rows are numbered from 1 at the header.
pub fn read_log(text: &str) -> Result<Vec<EpochLog>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == EPOCH_LOG_HEADER => {}
        other => bail!("train log row 1: expected header {EPOCH_LOG_HEADER:?}, found {other:?}"),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = numbers(line, 5, "train log", i + 2)?;
        if v[0] < 0.0 || v[0].fract() != 0.0 {
            bail!(
                "train log row {}: epoch {} is not a whole number",
                i + 2,
                v[0]
            );
        }
        out.push(EpochLog {
            epoch: v[0] as usize,
            train_loss: v[1],
            train_acc: v[2],
            val_loss: v[3],
            val_acc: v[4],
        });
    }
    if out.is_empty() {
        bail!("train log has no epochs");
    }
    Ok(out)
}

/// `(class, points)`.
pub type Curve = (usize, Vec<(f64, f64)>);

/// Curves in file order of first appearance.
pub fn read_roc(text: &str) -> Result<Vec<Curve>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "class,fpr,tpr" => {}
        other => bail!("roc row 1: expected header \"class,fpr,tpr\", found {other:?}"),
    }
    let mut curves: Vec<Curve> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = numbers(line, 3, "roc", i + 2)?;
        if v[0] < 0.0 || v[0].fract() != 0.0 {
            bail!("roc row {}: class {} is not a whole number", i + 2, v[0]);
        }
        let class = v[0] as usize;
        match curves.iter_mut().find(|(c, _)| *c == class) {
            Some((_, pts)) => pts.push((v[1], v[2])),
            None => curves.push((class, vec![(v[1], v[2])])),
        }
    }
    if curves.is_empty() {
        bail!("roc file has no points");
    }
    Ok(curves)
}

struct Panel {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        self.x
            + if b > a {
                (x - a) / (b - a) * self.w
            } else {
                self.w / 2.0
            }
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        self.y + self.h
            - if b > a {
                (y - a) / (b - a) * self.h
            } else {
                self.h / 2.0
            }
    }

    fn frame(&self, svg: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (x0, y0, x1, y1) = (self.x, self.y, self.x + self.w, self.y + self.h);
        writeln!(svg, r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##, self.w, self.h).unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{title}</text>"#,
            (x0 + x1) / 2.0,
            y0 - 10.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{x_label}</text>"#,
            (x0 + x1) / 2.0,
            y1 + 34.0
        )
        .unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{y_label}</text>"#, x0 - 42.0, (y0 + y1) / 2.0, x0 - 42.0, (y0 + y1) / 2.0).unwrap();
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.x_range.0 + f * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + f * (self.y_range.1 - self.y_range.0);
            let (tx, ty) = (self.px(xv), self.py(yv));
            writeln!(
                svg,
                r##"<line x1="{tx:.2}" y1="{y1:.2}" x2="{tx:.2}" y2="{:.2}" stroke="#333"/>"##,
                y1 + 4.0
            )
            .unwrap();
            writeln!(
                svg,
                r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
                y1 + 16.0,
                tick(xv)
            )
            .unwrap();
            writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{ty:.2}" x2="{x0:.2}" y2="{ty:.2}" stroke="#333"/>"##,
                x0 - 4.0
            )
            .unwrap();
            writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
                x0 - 6.0,
                ty + 3.0,
                tick(yv)
            )
            .unwrap();
        }
    }

    fn polyline(&self, svg: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            coords.join(" ")
        )
        .unwrap();
    }

    fn legend(&self, svg: &mut String, entries: &[(String, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = self.y + 14.0 + 16.0 * i as f64;
            let x = self.x + self.w - 150.0;
            writeln!(svg, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, x + 18.0).unwrap();
            writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#,
                x + 24.0,
                y + 4.0
            )
            .unwrap();
        }
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn svg_open(w: u32, h: u32) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Loss and accuracy against epoch, train and validation, in two panels.
pub fn training_svg(logs: &[EpochLog]) -> String {
    let mut svg = svg_open(920, 400);
    let epochs: Vec<f64> = logs.iter().map(|l| l.epoch as f64).collect();
    let x_range = (epochs[0], *epochs.last().unwrap());
    let losses = logs.iter().flat_map(|l| [l.train_loss, l.val_loss]);
    let (lo, hi) = losses.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let panels = [
        (
            "Loss",
            Panel {
                x: 70.0,
                y: 40.0,
                w: 360.0,
                h: 300.0,
                x_range,
                y_range: padded(lo.min(0.0), hi),
            },
        ),
        (
            "Accuracy",
            Panel {
                x: 530.0,
                y: 40.0,
                w: 360.0,
                h: 300.0,
                x_range,
                y_range: (0.0, 1.0),
            },
        ),
    ];
    for (i, (name, panel)) in panels.iter().enumerate() {
        panel.frame(
            &mut svg,
            &format!("Training and validation {}", name.to_lowercase()),
            "epoch",
            name,
        );
        let series = |f: fn(&EpochLog) -> f64| -> Vec<(f64, f64)> {
            logs.iter().map(|l| (l.epoch as f64, f(l))).collect()
        };
        let (train, val) = if i == 0 {
            (series(|l| l.train_loss), series(|l| l.val_loss))
        } else {
            (series(|l| l.train_acc), series(|l| l.val_acc))
        };
        panel.polyline(&mut svg, &train, PALETTE[0], false);
        panel.polyline(&mut svg, &val, PALETTE[1], false);
        panel.legend(
            &mut svg,
            &[
                (format!("train {}", name.to_lowercase()), PALETTE[0]),
                (format!("validation {}", name.to_lowercase()), PALETTE[1]),
            ],
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-class ROC curves with AUC in the legend.
pub fn roc_svg(curves: &[(usize, Vec<(f64, f64)>)]) -> String {
    let mut svg = svg_open(520, 500);
    let panel = Panel {
        x: 70.0,
        y: 40.0,
        w: 400.0,
        h: 400.0,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
    };
    panel.frame(
        &mut svg,
        "ROC curves (one vs rest)",
        "false positive rate",
        "true positive rate",
    );
    panel.polyline(&mut svg, &[(0.0, 0.0), (1.0, 1.0)], "#999999", true);
    let mut legend = Vec::new();
    for (class, pts) in curves {
        let color = PALETTE[class % PALETTE.len()];
        panel.polyline(&mut svg, pts, color, false);
        legend.push((format!("class {class} (AUC = {:.4})", auc(pts)), color));
    }
    panel.legend(&mut svg, &legend);
    svg.push_str("</svg>\n");
    svg
}

pub const TRAINING_SVG: &str = "training_curves.svg";
pub const ROC_SVG: &str = "roc_curves.svg";

pub fn run(log: &Path, roc: &Path, out: &Path) -> Result<()> {
    let log_text =
        std::fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let roc_text =
        std::fs::read_to_string(roc).with_context(|| format!("reading {}", roc.display()))?;
    let logs = read_log(&log_text).with_context(|| log.display().to_string())?;
    let curves = read_roc(&roc_text).with_context(|| roc.display().to_string())?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    crate::write_file(&out.join(TRAINING_SVG), training_svg(&logs).as_bytes())?;
    crate::write_file(&out.join(ROC_SVG), roc_svg(&curves).as_bytes())?;
    Ok(())
}
