//! Limit-set point clouds, circle fits and their text renderings.

use nalgebra::{DMatrix, DVector};
use quake_core::minkowski::{self, IsometryClass};
use quake_core::representation::Representation;
use serde::Serialize;
use std::fmt::Write;
use thiserror::Error;

/// Fixed points on S^{n-1} of the loxodromic images of reduced words up to `depth`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSetCloud {
    pub dim: usize,
    pub depth: usize,
    pub words: usize,
    /// Nontrivial words whose image was not loxodromic.
    pub skipped: usize,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitSetError {
    #[error("depth {0} exceeds the budget of {MAX_DEPTH}")]
    DepthBudget(usize),
    #[error("generator {0} is not loxodromic")]
    NotLoxodromic(String),
}

/// Largest word length enumerated; the word count grows like 7^depth.
pub const MAX_DEPTH: usize = 6;

pub fn limitset_cloud(rho: &Representation, depth: usize, angular_tolerance: f64) -> Result<LimitSetCloud, LimitSetError> {
    if depth > MAX_DEPTH {
        return Err(LimitSetError::DepthBudget(depth));
    }
    let names = rho.presentation().generator_names();
    if let Some(i) = rho.images().iter().position(|g| minkowski::classify(g) != IsometryClass::Loxodromic) {
        return Err(LimitSetError::NotLoxodromic(names[i].clone()));
    }
    let n = rho.dim();
    let words = rho.presentation().words_up_to(depth);
    let mut raw = Vec::new();
    let mut skipped = 0;
    let mut count = 0;
    for w in words.iter().filter(|w| !w.is_empty()) {
        count += 1;
        let g = rho.evaluate(w);
        if minkowski::classify(&g) != IsometryClass::Loxodromic {
            skipped += 1;
            continue;
        }
        match minkowski::fixed_points(&g) {
            Ok((rep, att)) => {
                raw.push(rep.spatial());
                raw.push(att.spatial());
            }
            Err(_) => skipped += 1,
        }
    }
    Ok(LimitSetCloud { dim: n, depth, words: count, skipped, points: dedup(raw, angular_tolerance) })
}

fn chord(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Removes points within `tol` (chordal, which matches the angle at this scale)
/// of an earlier kept point; output is sorted lexicographically.
fn dedup(mut points: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    points.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        let duplicate = kept.iter().rev().take_while(|q| p[0] - q[0] <= tol).any(|q| chord(&p, q) <= tol);
        if !duplicate {
            kept.push(p);
        }
    }
    kept
}

/// Least-squares circle: best affine 2-plane through the centroid, then an
/// algebraic circle fit inside that plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleFit {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Orthonormal basis of the fitted plane.
    pub basis: [Vec<f64>; 2],
    /// Largest distance from a point to the fitted circle.
    pub max_deviation: f64,
    pub rms_deviation: f64,
}

pub fn fit_circle(points: &[Vec<f64>]) -> Option<CircleFit> {
    let m = points.len();
    let d = points.first()?.len();
    if m < 3 || d < 2 {
        return None;
    }
    let pts: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
    let centroid = pts.iter().fold(DVector::zeros(d), |acc, p| acc + p) / m as f64;
    let centered = DMatrix::from_fn(m, d, |i, j| pts[i][j] - centroid[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let e1: DVector<f64> = v_t.row(order[0]).transpose();
    let e2: DVector<f64> = v_t.row(order[1]).transpose();

    // in-plane coordinates, then x² + y² = 2cx·x + 2cy·y + k
    let planar: Vec<(f64, f64)> = pts.iter().map(|p| ((p - &centroid).dot(&e1), (p - &centroid).dot(&e2))).collect();
    let a = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => 2.0 * planar[i].0,
        1 => 2.0 * planar[i].1,
        _ => 1.0,
    });
    let rhs = DVector::from_fn(m, |i, _| planar[i].0.powi(2) + planar[i].1.powi(2));
    let sol = a.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let (cx, cy) = (sol[0], sol[1]);
    let radius = (sol[2] + cx * cx + cy * cy).max(0.0).sqrt();
    let center = &centroid + &e1 * cx + &e2 * cy;

    let deviations: Vec<f64> = pts
        .iter()
        .zip(&planar)
        .map(|(p, &(x, y))| {
            let offset = p - &centroid;
            let normal = (&offset - &e1 * x - &e2 * y).norm();
            let radial = ((x - cx).hypot(y - cy) - radius).abs();
            normal.hypot(radial)
        })
        .collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let rms_deviation = (deviations.iter().map(|x| x * x).sum::<f64>() / m as f64).sqrt();
    Some(CircleFit {
        center: center.iter().copied().collect(),
        radius,
        basis: [e1.iter().copied().collect(), e2.iter().copied().collect()],
        max_deviation,
        rms_deviation,
    })
}

/// CSV with a `# config <hash>` comment line before the `x1,…,xn` header.
pub fn to_csv(cloud: &LimitSetCloud, config_hash: &str) -> String {
    let mut out = format!("# config {config_hash}\n");
    let header: Vec<String> = (1..=cloud.dim).map(|i| format!("x{i}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in &cloud.points {
        let row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

const VIEW: f64 = 1.1;

fn svg_document(config_hash: &str, title: &str, outline: Option<f64>, points: &[(f64, f64)], scale: f64) -> String {
    let mut s = String::new();
    let side = 2.0 * VIEW * scale;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="600">"#,
        -VIEW * scale,
        -VIEW * scale,
        side,
        side
    );
    let _ = writeln!(s, "<!-- config {config_hash} -->");
    let _ = writeln!(s, "<title>{title}</title>");
    if let Some(r) = outline {
        let _ = writeln!(s, r#"<circle cx="0" cy="0" r="{r}" fill="none" stroke="gray" stroke-width="{}"/>"#, 0.004 * scale);
    }
    let dot = 0.006 * scale;
    for &(x, y) in points {
        // SVG's y axis points down
        let _ = writeln!(s, r#"<circle cx="{x}" cy="{}" r="{dot}"/>"#, -y);
    }
    s.push_str("</svg>\n");
    s
}

/// Points on the boundary circle of the disk, for n = 2.
pub fn disk_svg(cloud: &LimitSetCloud, config_hash: &str) -> String {
    let pts: Vec<(f64, f64)> = cloud.points.iter().map(|p| (p[0], p[1])).collect();
    svg_document(config_hash, "limit set, disk model", Some(1.0), &pts, 1.0)
}

/// Stereographic projection of S² from the pole `pole` onto the plane orthogonal to it.
pub fn stereographic(points: &[Vec<f64>], pole: &[f64; 3]) -> Vec<(f64, f64)> {
    let p = DVector::from_column_slice(pole).normalize();
    let helper = if p[0].abs() < 0.9 { DVector::from_column_slice(&[1.0, 0.0, 0.0]) } else { DVector::from_column_slice(&[0.0, 1.0, 0.0]) };
    let u = (&helper - &p * helper.dot(&p)).normalize();
    let v = p.cross(&u);
    points
        .iter()
        .map(|q| {
            let q = DVector::from_column_slice(q);
            let denom = 1.0 - q.dot(&p);
            (q.dot(&u) / denom, q.dot(&v) / denom)
        })
        .collect()
}

/// For n = 3: stereographic image projected from the normal of the fitted
/// plane, so that a round circle stays bounded.
pub fn sphere_svg(cloud: &LimitSetCloud, config_hash: &str) -> String {
    let pole = fit_circle(&cloud.points)
        .map(|f| {
            let (a, b) = (&f.basis[0], &f.basis[1]);
            let n = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            let c = &f.center;
            // take the side away from the circle's center
            let side = if n[0] * c[0] + n[1] * c[1] + n[2] * c[2] > 0.0 { -1.0 } else { 1.0 };
            [side * n[0], side * n[1], side * n[2]]
        })
        .unwrap_or([0.0, 0.0, 1.0]);
    let pts = stereographic(&cloud.points, &pole);
    let extent = pts.iter().map(|&(x, y)| x.abs().max(y.abs())).fold(1.0, f64::max).min(1e3);
    svg_document(config_hash, "limit set, stereographic", Some(1.0), &pts, extent)
}
