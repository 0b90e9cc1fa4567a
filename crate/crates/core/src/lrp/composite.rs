use super::LayerRule;
use crate::error::{Error, Result};
use crate::nn::{LayerSpec, NetworkSpec};

/// Composite rule map: the first two conv layers use the flat rule, later
/// conv layers alpha=1/beta=0 and dense layers epsilon. Average pooling
/// inherits the rule of the conv before it.
pub fn composite_assignment(net: &NetworkSpec, epsilon: f64) -> Result<Vec<LayerRule>> {
    let convs = net.layers().iter().filter(|l| matches!(l, LayerSpec::Conv2d(_))).count();
    let dense = net.layers().iter().filter(|l| matches!(l, LayerSpec::Dense(_))).count();
    if convs < 2 {
        return Err(Error::Assignment(format!("composite rule needs at least two conv layers, network has {convs}")));
    }
    if dense < 1 {
        return Err(Error::Assignment("composite rule needs at least one dense layer".into()));
    }
    let mut seen = 0;
    let mut last_conv = LayerRule::Flat;
    Ok(net
        .layers()
        .iter()
        .map(|l| match l {
            LayerSpec::Conv2d(_) => {
                seen += 1;
                last_conv = if seen <= 2 { LayerRule::Flat } else { LayerRule::AlphaBeta { alpha: 1.0, beta: 0.0 } };
                last_conv
            }
            LayerSpec::AvgPool(_) => last_conv,
            LayerSpec::Dense(_) => LayerRule::Epsilon(epsilon),
            _ => LayerRule::PassThrough,
        })
        .collect())
}
