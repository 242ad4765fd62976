//! Browser bindings. The plain functions return `String` errors so they can
//! be exercised natively; the `#[wasm_bindgen]` wrappers turn those into JS
//! exceptions.

use critrange::asymptotics::{normalizer_expansion, normalizer_series_quadrature, MAX_ORDER};
use critrange::limit_laws::{endpoint_density, max_cdf};
use critrange::{ModelParams, SeriesCtl};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 2000;

fn grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(to > from) || !from.is_finite() || !to.is_finite() {
        return Err(format!("need a finite range with from < to, got [{from}, {to}]"));
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must lie in 2..={MAX_POINTS}, got {points}"));
    }
    Ok((0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect())
}

/// `T(x)` on an even grid; zero for `x <= 0`.
pub fn max_law_values(from: f64, to: f64, points: usize) -> Result<Vec<f64>, String> {
    let ctl = SeriesCtl::default();
    grid(from, to, points)?
        .into_iter()
        .map(|x| if x > 0.0 { max_cdf(x, ctl) } else { Ok(0.0) })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())
}

/// Density of the limiting endpoint at time `u` on an even grid.
pub fn endpoint_values(u: f64, h: f64, from: f64, to: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(format!("u must be positive, got {u}"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(format!("h must be positive, got {h}"));
    }
    let ctl = SeriesCtl::default();
    grid(from, to, points)?
        .into_iter()
        .map(|x| endpoint_density(x, u, h, ctl))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())
}

/// Scaled expansion against quadrature, as a JSON array of rows.
pub fn expansion_rows(t: f64, h: f64, n: usize) -> Result<String, String> {
    if n > MAX_ORDER {
        return Err(format!("order is capped at {MAX_ORDER}"));
    }
    let p = ModelParams::new(h, t).map_err(|e| e.to_string())?;
    let tab = normalizer_expansion(p, n).map_err(|e| e.to_string())?;
    let q = normalizer_series_quadrature(p, SeriesCtl::default())
        .map_err(|e| e.to_string())?
        .scaled;
    let rows: Vec<_> = tab
        .scaled_terms()
        .into_iter()
        .zip(tab.scaled_partials())
        .enumerate()
        .map(|(l, (term, partial))| {
            json!({ "l": l, "term": term, "partial": partial, "quadrature": q, "abs_diff": (q - partial).abs() })
        })
        .collect();
    Ok(serde_json::Value::Array(rows).to_string())
}

#[wasm_bindgen]
pub fn max_law_curve(from: f64, to: f64, points: usize) -> Result<Vec<f64>, JsError> {
    max_law_values(from, to, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn endpoint_curve(u: f64, h: f64, from: f64, to: f64, points: usize) -> Result<Vec<f64>, JsError> {
    endpoint_values(u, h, from, to, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn expansion_table(t: f64, h: f64, n: usize) -> Result<String, JsError> {
    expansion_rows(t, h, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn version() -> String {
    critrange::VERSION.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_law_curve_is_a_cdf() {
        let v = max_law_values(-1.0, 5.0, 61).unwrap();
        assert_eq!(v[0], 0.0);
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        assert!(v[60] > 0.9999 && v[60] <= 1.0);
        // x = 1 sits at index 20.
        assert!((v[20] - 0.0143840).abs() < 1e-6);
    }

    #[test]
    fn endpoint_curve_integrates_to_one() {
        let (lo, hi, n) = (-30.0, 10.0, 2000);
        let v = endpoint_values(1.0, 1.0, lo, hi, n).unwrap();
        let dx = (hi - lo) / (n - 1) as f64;
        let mass: f64 = v.iter().sum::<f64>() * dx - 0.5 * dx * (v[0] + v[n - 1]);
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }

    #[test]
    fn expansion_rows_shape() {
        let rows: serde_json::Value = serde_json::from_str(&expansion_rows(50.0, 1.0, 3).unwrap()).unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), 4);
        assert!((rows[3]["partial"].as_f64().unwrap() - 0.928064).abs() < 1e-12);
        assert!(rows[3]["abs_diff"].as_f64().unwrap() < 4e-4);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(max_law_values(1.0, 0.0, 10).is_err());
        assert!(max_law_values(0.0, 1.0, 1).is_err());
        assert!(endpoint_values(0.0, 1.0, 0.0, 1.0, 10).is_err());
        assert!(expansion_rows(50.0, 1.0, 9).is_err());
        assert!(expansion_rows(-1.0, 1.0, 3).is_err());
    }
}
