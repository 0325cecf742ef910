//! Tape-based reverse-mode differentiation.
//!
//! A [`Tape`] records every operation applied to [`Var`]s during one
//! evaluation of a log-density. Each node stores its value and the local
//! partial derivatives with respect to its parents, so a single reverse sweep
//! yields the full gradient. Nodes are appended in evaluation order, which
//! keeps the tape topologically sorted.
//!
//! The tape is rebuilt for every evaluation: models branch on the nuisance
//! assignment, so the recorded graph changes between gradient calls.
//!
//! ```
//! use sdpp::autodiff::grad;
//! use sdpp::Scalar;
//!
//! let (v, g) = grad(&[1.5f64], |x| -(x[0] * x[0]) / Scalar::constant(2.0)).unwrap();
//! assert_eq!(v, -1.125);
//! assert_eq!(g, vec![-1.5]);
//! ```

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};


use crate::error::{Error, Result};
use crate::scalar::{bernoulli_logit_logpmf_value, bernoulli_logpmf_value, normal_logpdf_value, Real, Scalar};
use crate::{counters, math};

type NodeId = u32;

#[derive(Default)]
struct TapeData<F> {
    values: Vec<F>,
    /// Node `i` owns `edges[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<u32>,
    edges: Vec<(NodeId, F)>,
}

/// Append-only operation log for one gradient evaluation.
pub struct Tape<F> {
    data: RefCell<TapeData<F>>,
    n_inputs: usize,
}

impl<F: Real> Tape<F> {
    fn new() -> Self {
        Tape {
            data: RefCell::new(TapeData {
                values: Vec::new(),
                offsets: vec![0],
                edges: Vec::new(),
            }),
            n_inputs: 0,
        }
    }

    fn push(&self, value: F, parents: impl IntoIterator<Item = (NodeId, F)>) -> NodeId {
        let mut d = self.data.borrow_mut();
        let id = d.values.len() as NodeId;
        d.values.push(value);
        d.edges.extend(parents);
        let end = d.edges.len() as u32;
        d.offsets.push(end);
        id
    }

    pub fn len(&self) -> usize {
        self.data.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn first_non_finite(&self) -> Option<usize> {
        self.data.borrow().values.iter().position(|v| !v.is_finite())
    }

    fn adjoints(&self, output: NodeId) -> Vec<F> {
        let d = self.data.borrow();
        let mut adj = vec![F::zero(); output as usize + 1];
        adj[output as usize] = F::one();
        for i in (0..=output as usize).rev() {
            let a = adj[i];
            if a == F::zero() {
                continue;
            }
            let (lo, hi) = (d.offsets[i] as usize, d.offsets[i + 1] as usize);
            for &(p, partial) in &d.edges[lo..hi] {
                adj[p as usize] = adj[p as usize] + a * partial;
            }
        }
        adj.truncate(self.n_inputs);
        adj.resize(self.n_inputs, F::zero());
        adj
    }
}

/// A scalar that is either a constant or a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, F> {
    value: F,
    node: Option<(&'t Tape<F>, NodeId)>,
}

impl<F: fmt::Debug> fmt::Debug for Var<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some((_, id)) => write!(f, "Var({:?} @{})", self.value, id),
            None => write!(f, "Var({:?})", self.value),
        }
    }
}

impl<'t, F: Real> Var<'t, F> {
    pub fn constant_value(value: F) -> Self {
        Var { value, node: None }
    }

    pub fn is_constant(&self) -> bool {
        self.node.is_none()
    }

    fn unary(self, value: F, partial: F) -> Self {
        match self.node {
            Some((tape, id)) => Var {
                value,
                node: Some((tape, tape.push(value, [(id, partial)]))),
            },
            None => Var::constant_value(value),
        }
    }

    fn binary(self, other: Self, value: F, da: F, db: F) -> Self {
        match (self.node, other.node) {
            (None, None) => Var::constant_value(value),
            (Some((tape, a)), None) => Var {
                value,
                node: Some((tape, tape.push(value, [(a, da)]))),
            },
            (None, Some((tape, b))) => Var {
                value,
                node: Some((tape, tape.push(value, [(b, db)]))),
            },
            (Some((tape, a)), Some((_, b))) => Var {
                value,
                node: Some((tape, tape.push(value, [(a, da), (b, db)]))),
            },
        }
    }

    /// Node with arbitrary parents; `partials[i]` is d value / d `args[i]`.
    fn nary(args: &[Self], value: F, partials: impl Iterator<Item = F>) -> Self {
        let tape = args.iter().find_map(|a| a.node.map(|(t, _)| t));
        match tape {
            None => Var::constant_value(value),
            Some(tape) => {
                let parents = args
                    .iter()
                    .zip(partials)
                    .filter_map(|(a, p)| a.node.map(|(_, id)| (id, p)));
                Var {
                    value,
                    node: Some((tape, tape.push(value, parents))),
                }
            }
        }
    }
}

impl<F: Real> Add for Var<'_, F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.binary(o, self.value + o.value, F::one(), F::one())
    }
}

impl<F: Real> Sub for Var<'_, F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.binary(o, self.value - o.value, F::one(), -F::one())
    }
}

impl<F: Real> Mul for Var<'_, F> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.binary(o, self.value * o.value, o.value, self.value)
    }
}

impl<F: Real> Div for Var<'_, F> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.value / o.value;
        self.binary(o, q, F::one() / o.value, -q / o.value)
    }
}

impl<F: Real> Neg for Var<'_, F> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -F::one())
    }
}

impl<F: Real> Scalar for Var<'_, F> {
    type Real = F;

    fn constant(v: f64) -> Self {
        Var::constant_value(F::from_f64(v).unwrap())
    }

    fn value(self) -> F {
        self.value
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e)
    }

    fn ln(self) -> Self {
        self.unary(self.value.ln(), F::one() / self.value)
    }

    fn sigmoid(self) -> Self {
        let s = math::sigmoid(self.value);
        self.unary(s, s * (F::one() - s))
    }

    fn log_sum_exp(terms: &[Self]) -> Self {
        counters::record_lse(terms.len());
        let values: Vec<F> = terms.iter().map(|t| t.value).collect();
        let lse = math::log_sum_exp_unchecked(&values);
        // d lse / d t_i = softmax_i
        Var::nary(terms, lse, values.iter().map(|&v| (v - lse).exp()))
    }

    fn log_softmax(u: &[Self]) -> Vec<Self> {
        counters::record_lse(u.len());
        let values: Vec<F> = u.iter().map(|t| t.value).collect();
        let mut probs = Vec::with_capacity(u.len());
        math::softmax_into(&values, &mut probs);
        let norm = math::log_sum_exp_unchecked(&values);
        (0..u.len())
            .map(|i| {
                // d l_i / d u_j = [i == j] - p_j
                let partials = probs
                    .iter()
                    .enumerate()
                    .map(move |(j, &p)| if i == j { F::one() - p } else { -p });
                Var::nary(u, values[i] - norm, partials)
            })
            .collect()
    }

    fn normal_logpdf(mu: Self, sigma: Self, v: Self) -> Self {
        counters::record_density();
        let value = normal_logpdf_value(mu.value, sigma.value, v.value);
        let inv_s = F::one() / sigma.value;
        let z = (v.value - mu.value) * inv_s;
        let d_mu = z * inv_s;
        let d_sigma = (z * z - F::one()) * inv_s;
        Var::nary(&[mu, sigma, v], value, [d_mu, d_sigma, -d_mu].into_iter())
    }

    fn bernoulli_logpmf(p: Self, v: bool) -> Self {
        counters::record_density();
        let value = bernoulli_logpmf_value(p.value, v);
        let partial = if v {
            F::one() / p.value
        } else {
            -F::one() / (F::one() - p.value)
        };
        p.unary(value, partial)
    }

    fn bernoulli_logit_logpmf(logit: Self, v: bool) -> Self {
        counters::record_density();
        let value = bernoulli_logit_logpmf_value(logit.value, v);
        let s = math::sigmoid(logit.value);
        let partial = if v { F::one() - s } else { -s };
        logit.unary(value, partial)
    }
}

/// Value and gradient of `f` at `x`.
///
/// `f` receives the trace as tape variables. Any non-finite value recorded on
/// the tape or in the gradient is reported as [`Error::NonFinite`].
pub fn grad<F, G>(x: &[F], f: G) -> Result<(F, Vec<F>)>
where
    F: Real,
    G: for<'t> FnOnce(&[Var<'t, F>]) -> Var<'t, F>,
{
    let mut tape = Tape::new();
    tape.n_inputs = x.len();
    for &v in x {
        tape.push(v, std::iter::empty());
    }
    let tape = tape;
    let inputs: Vec<Var<'_, F>> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Var {
            value: v,
            node: Some((&tape, i as NodeId)),
        })
        .collect();
    let out = f(&inputs);
    let trace = || x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect::<Vec<_>>();
    if let Some(node) = tape.first_non_finite() {
        return Err(Error::non_finite(format!("tape node {node}"), &trace()));
    }
    if !out.value.is_finite() {
        return Err(Error::non_finite("output", &trace()));
    }
    let g = match out.node {
        Some((_, id)) => tape.adjoints(id),
        None => vec![F::zero(); x.len()],
    };
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("gradient", &trace()));
    }
    Ok((out.value, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c<'t>(v: f64) -> Var<'t, f64> {
        Scalar::constant(v)
    }

    fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - f(&xm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn standard_normal_gradient() {
        let (v, g) = grad(&[1.5], |x| -(x[0] * x[0]) / c(2.0)).unwrap();
        assert_eq!(v, -1.125);
        assert_eq!(g, vec![-1.5]);
    }

    #[test]
    fn log_sigmoid_gradient() {
        let (v, g) = grad(&[0.0], |x| x[0].sigmoid().ln()).unwrap();
        assert_abs_diff_eq!(v, 0.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn constant_output_has_zero_gradient() {
        let (v, g) = grad(&[3.0, 4.0], |_| c(7.0)).unwrap();
        assert_eq!(v, 7.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn non_finite_is_reported() {
        let err = grad(&[0.0], |x| x[0].ln()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        let err = grad(&[-1.0], |x| x[0].ln() + x[0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { ref trace, .. } if trace == &vec![-1.0]));
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        fn f<'t>(x: &[Var<'t, f64>]) -> Var<'t, f64> {
            let t = [x[0] * x[1], x[1].exp(), x[0].sigmoid()];
            Scalar::log_sum_exp(&t) + Scalar::normal_logpdf(x[0], x[1].exp(), c(0.3))
        }
        let a = grad(&[0.4, -0.2], f).unwrap();
        let b = grad(&[0.4, -0.2], f).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        for (p, q) in a.1.iter().zip(&b.1) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
    }

    #[test]
    fn works_in_single_precision() {
        let (v, g) = grad(&[2.0f32], |x| x[0] * x[0] * x[0]).unwrap();
        assert_eq!(v, 8.0);
        assert_eq!(g, vec![12.0f32]);
    }

    #[test]
    fn node_primitives_match_finite_differences() {
        let x = [0.3, -0.7, 1.1];
        fn ad<'t>(x: &[Var<'t, f64>]) -> Var<'t, f64> {
            let ls = Scalar::log_softmax(&[x[0], x[1], x[2]]);
            let b = Scalar::bernoulli_logpmf(x[0].sigmoid(), false);
            let n = Scalar::normal_logpdf(x[1], x[2].exp(), x[0]);
            ls[0] * c(2.0) - ls[2] + b + n / (x[2] * x[2] + c(1.0))
        }
        let plain = |x: &[f64]| {
            let ls = math::log_softmax(x).unwrap();
            let b = (1.0 - math::sigmoid(x[0])).ln();
            let n = normal_logpdf_value(x[1], x[2].exp(), x[0]);
            ls[0] * 2.0 - ls[2] + b + n / (x[2] * x[2] + 1.0)
        };
        let (v, g) = grad(&x, ad).unwrap();
        assert_abs_diff_eq!(v, plain(&x), epsilon = 1e-13);
        let fd = central_diff(plain, &x, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-2), "{a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn gradient_is_linear_in_terms(x in prop::collection::vec(-2.0f64..2.0, 3),
                                       split in 0usize..4) {
            fn terms<'t>(x: &[Var<'t, f64>]) -> Vec<Var<'t, f64>> {
                vec![
                    Scalar::normal_logpdf(x[0], x[1].exp(), c(0.5)),
                    Scalar::normal_logpdf(x[2], c(1.0), x[0]),
                    x[1].sigmoid().ln(),
                    Scalar::log_sum_exp(&[x[0], x[2]]),
                ]
            }
            let (_, whole) = grad(&x, |v| terms(v).into_iter().reduce(|a, b| a + b).unwrap()).unwrap();
            let (_, left) = grad(&x, move |v| terms(v)[..split].iter().fold(c(0.0), |a, &b| a + b)).unwrap();
            let (_, right) = grad(&x, move |v| terms(v)[split..].iter().fold(c(0.0), |a, &b| a + b)).unwrap();
            for i in 0..3 {
                prop_assert!((whole[i] - left[i] - right[i]).abs() < 1e-12);
            }
        }
    }
}
