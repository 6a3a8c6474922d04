use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::context::Domain;
use super::model::Glno;
use crate::autodiff::{Matrix, Tape, Var};
use crate::error::Result;

/// Absolute floor of the relative-error denominator, so entries whose true
/// derivative is numerically zero are judged on absolute deviation.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

/// Worst finite-difference deviation per parameter group.
#[derive(Debug, Clone)]
pub struct GradcheckReport {
    /// `(group, max relative error, entries checked)`.
    pub groups: Vec<(String, f64, usize)>,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.groups.iter().map(|g| g.1).fold(0.0, f64::max)
    }
}

/// `|a - b| / max(|a|, |b|, GRADCHECK_FLOOR)`.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRADCHECK_FLOOR)
}

/// Parameter group of a stored name: block index and pole/decay indices
/// stripped, so `block1.beta_re.0` belongs to `beta_re`.
pub fn parameter_group(name: &str) -> String {
    let parts: Vec<&str> = name.split('.').collect();
    let start = usize::from(parts.first().is_some_and(|p| p.starts_with("block")));
    parts[start..]
        .iter()
        .filter(|p| p.parse::<usize>().is_err())
        .copied()
        .collect::<Vec<_>>()
        .join(".")
}

/// Compares reverse-mode gradients of `loss(forward(input))` against central
/// differences with step `h`, checking up to `per_param` entries of every
/// parameter.
pub fn gradcheck(
    model: &Glno,
    domain: &Domain,
    input: &Matrix,
    loss: &dyn Fn(&mut Tape, Var) -> Result<Var>,
    h: f64,
    per_param: usize,
    seed: u64,
) -> Result<GradcheckReport> {
    let eval = |m: &Glno| -> Result<f64> {
        let mut tape = Tape::new();
        let (out, _) = m.forward(&mut tape, domain, input)?;
        let l = loss(&mut tape, out)?;
        Ok(tape.scalar(l))
    };
    let mut tape = Tape::new();
    let (out, pv) = model.forward(&mut tape, domain, input)?;
    let l = loss(&mut tape, out)?;
    let grads = tape.backward(l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut probe = model.clone();
    for (i, name) in model.params.names().iter().enumerate() {
        let len = model.params.value(i).data.len();
        let analytic = grads.get_or_zeros(pv.0[i], len);
        let idx: Vec<usize> = if len <= per_param {
            (0..len).collect()
        } else {
            sample(&mut rng, len, per_param).into_vec()
        };
        let entry = groups.entry(parameter_group(name)).or_insert((0.0, 0));
        for j in idx {
            let x0 = model.params.value(i).data[j];
            probe.params.value_mut(i).data[j] = x0 + h;
            let fp = eval(&probe)?;
            probe.params.value_mut(i).data[j] = x0 - h;
            let fm = eval(&probe)?;
            probe.params.value_mut(i).data[j] = x0;
            let numeric = (fp - fm) / (2.0 * h);
            entry.0 = entry.0.max(relative_deviation(analytic[j], numeric));
            entry.1 += 1;
        }
    }
    Ok(GradcheckReport {
        groups: groups.into_iter().map(|(k, (e, n))| (k, e, n)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_strip_indices() {
        assert_eq!(parameter_group("block1.beta_re.0"), "beta_re");
        assert_eq!(parameter_group("block0.fuse.w1"), "fuse.w1");
        assert_eq!(parameter_group("enc.w2"), "enc.w2");
        assert_eq!(parameter_group("block3.sigma"), "sigma");
    }
}
