use super::matrix::DenseMatrix;

/// Role of a parameter tensor. Only weights carry the L2 penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    Weight,
    Bias,
}

/// A fixed, ordered collection of parameter tensors.
///
/// Gradient and optimizer-moment containers use the same type as the
/// parameters they describe, so shapes always line up.
pub trait ParamSet: Clone {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, v, _| n += v.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, v, _| out.extend_from_slice(v));
        out
    }

    /// Overwrite all parameters from a flat slice in visiting order.
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.visit_mut(&mut |_, v, _| {
            v.copy_from_slice(&flat[offset..offset + v.len()]);
            offset += v.len();
        });
        assert_eq!(offset, flat.len(), "flat parameter length mismatch");
    }

    fn roles(&self) -> Vec<ParamRole> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, v, role| out.extend(std::iter::repeat_n(role, v.len())));
        out
    }

    /// `(name, len)` per tensor, in visiting order.
    fn layout(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit(&mut |name, v, _| out.push((name.to_string(), v.len())));
        out
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.visit_mut(&mut |_, v, _| v.iter_mut().for_each(|x| *x = 0.0));
        z
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, v, _| ok &= v.iter().all(|x| x.is_finite()));
        ok
    }

    /// `Σ w²` over weight tensors.
    fn weight_sq_norm(&self) -> f64 {
        let mut s = 0.0;
        self.visit(&mut |_, v, role| {
            if role == ParamRole::Weight {
                s += v.iter().map(|x| x * x).sum::<f64>();
            }
        });
        s
    }

    /// `grads += l2 · w` on weight tensors of `self`.
    fn add_l2_grad(&self, grads: &mut Self, l2: f64) {
        if l2 == 0.0 {
            return;
        }
        let flat = self.flatten();
        let roles = self.roles();
        let mut offset = 0;
        grads.visit_mut(&mut |_, g, _| {
            for (j, gj) in g.iter_mut().enumerate() {
                if roles[offset + j] == ParamRole::Weight {
                    *gj += l2 * flat[offset + j];
                }
            }
            offset += g.len();
        });
    }

    fn scale(&mut self, factor: f64) {
        self.visit_mut(&mut |_, v, _| v.iter_mut().for_each(|x| *x *= factor));
    }
}

impl ParamSet for DenseMatrix {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        f("matrix", self.values(), ParamRole::Weight);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        f("matrix", self.values_mut(), ParamRole::Weight);
    }
}

impl<P: ParamSet> ParamSet for Vec<P> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        for p in self {
            p.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        for p in self {
            p.visit_mut(f);
        }
    }
}
