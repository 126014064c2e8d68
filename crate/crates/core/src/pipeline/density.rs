use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-layer remaining-parameter fractions under a global budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityAllocation {
    pub global_density: f64,
    pub type_densities: BTreeMap<String, f64>,
    /// User-supplied per-layer fractions.
    pub layer_fractions: Vec<f64>,
    /// Resulting density of each layer after renormalization.
    pub layer_densities: Vec<f64>,
}

impl DensityAllocation {
    /// Every layer compressed to `global`.
    pub fn uniform(global: f64, layer_shapes: &[(usize, usize)]) -> Result<Self> {
        let tags = vec!["linear".to_string(); layer_shapes.len()];
        let types = BTreeMap::from([("linear".to_string(), global)]);
        allocate_densities(global, &types, &tags, &vec![global; layer_shapes.len()], layer_shapes)
    }

    /// Parameter-weighted mean of the layer densities.
    pub fn effective_density(&self, layer_shapes: &[(usize, usize)]) -> f64 {
        let total: f64 = layer_shapes.iter().map(|&(m, n)| (m * n) as f64).sum();
        self.layer_densities
            .iter()
            .zip(layer_shapes)
            .map(|(d, &(m, n))| d * (m * n) as f64)
            .sum::<f64>()
            / total
    }
}

fn check_fraction(what: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Invalid(format!("{what} must be positive, got {v}")));
    }
    Ok(())
}

/// `density_i = type_density[tag_i] * layer_fraction_i / global`, then one
/// proportional rescale so the parameter-weighted mean equals `global`.
pub fn allocate_densities(
    global: f64,
    type_densities: &BTreeMap<String, f64>,
    layer_tags: &[String],
    layer_fractions: &[f64],
    layer_shapes: &[(usize, usize)],
) -> Result<DensityAllocation> {
    if !(global > 0.0 && global <= 1.0) {
        return Err(Error::Invalid(format!(
            "global density must lie in (0, 1], got {global}"
        )));
    }
    let depth = layer_shapes.len();
    if layer_tags.len() != depth || layer_fractions.len() != depth || depth == 0 {
        return Err(Error::Invalid(format!(
            "{} tags and {} layer fractions for {} layers",
            layer_tags.len(),
            layer_fractions.len(),
            depth
        )));
    }
    for (tag, &d) in type_densities {
        check_fraction(&format!("type density '{tag}'"), d)?;
    }
    let mut raw = Vec::with_capacity(depth);
    for (i, (tag, &frac)) in layer_tags.iter().zip(layer_fractions).enumerate() {
        check_fraction(&format!("layer {i} fraction"), frac)?;
        let ty = *type_densities
            .get(tag)
            .ok_or_else(|| Error::Invalid(format!("layer {i}: no type density for tag '{tag}'")))?;
        raw.push(ty * frac / global);
    }
    let sizes: Vec<f64> = layer_shapes.iter().map(|&(m, n)| (m * n) as f64).collect();
    let total: f64 = sizes.iter().sum();
    let spent: f64 = raw.iter().zip(&sizes).map(|(d, s)| d * s).sum();
    let scale = global * total / spent;
    let layer_densities: Vec<f64> = raw.iter().map(|d| d * scale).collect();
    for (layer, &density) in layer_densities.iter().enumerate() {
        if !(density > 0.0 && density <= 1.0 + 1e-12) {
            return Err(Error::Infeasible {
                density,
                detail: format!("layer {layer} would need density {density:.6}, outside (0, 1]"),
            });
        }
    }
    Ok(DensityAllocation {
        global_density: global,
        type_densities: type_densities.clone(),
        layer_fractions: layer_fractions.to_vec(),
        layer_densities: layer_densities.into_iter().map(|d| d.min(1.0)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_collapses_to_global() {
        let shapes = [(8, 4), (4, 8), (6, 4)];
        let a = DensityAllocation::uniform(0.3, &shapes).unwrap();
        for d in &a.layer_densities {
            assert!((d - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn split_types_hold_budget() {
        let shapes = [(10, 10); 4];
        let tags: Vec<String> = ["attn", "attn", "mlp", "mlp"].iter().map(|s| s.to_string()).collect();
        let types = BTreeMap::from([("attn".to_string(), 0.4), ("mlp".to_string(), 0.6)]);
        let a = allocate_densities(0.5, &types, &tags, &[0.5; 4], &shapes).unwrap();
        let expected = [0.4, 0.4, 0.6, 0.6];
        for (d, e) in a.layer_densities.iter().zip(expected) {
            assert!((d - e).abs() < 1e-12);
        }
        assert!((a.effective_density(&shapes) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn overfull_layer_is_rejected() {
        let shapes = [(10, 10), (10, 90)];
        let tags = vec!["linear".to_string(); 2];
        let types = BTreeMap::from([("linear".to_string(), 0.6)]);
        let err = allocate_densities(0.6, &types, &tags, &[0.6 * 2.0, 0.6 * 0.9], &shapes).unwrap_err();
        match err {
            Error::Infeasible { detail, .. } => assert!(detail.contains("layer 0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_inputs() {
        let shapes = [(2, 2)];
        let tags = vec!["linear".to_string()];
        let types = BTreeMap::from([("linear".to_string(), 0.5)]);
        assert!(allocate_densities(0.0, &types, &tags, &[0.5], &shapes).is_err());
        assert!(allocate_densities(0.5, &types, &tags, &[-0.5], &shapes).is_err());
        assert!(allocate_densities(0.5, &BTreeMap::new(), &tags, &[0.5], &shapes).is_err());
    }
}
