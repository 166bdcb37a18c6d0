//! Uniform access to the trainable tensors of a network.
//!
//! Gradients use the same types as the parameters they belong to, so a network
//! and its gradient accumulator flatten to vectors with identical layout.

/// A bundle of named parameter tensors.
///
/// `visit` and `visit_mut` must yield tensors in the same order.
pub trait Params {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, t| n += t.len());
        n
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit("", &mut |_, t| out.extend_from_slice(t));
        out
    }

    /// Overwrite every tensor from `flat`; panics on length mismatch.
    fn set_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.visit_mut(&mut |t| {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        });
        assert_eq!(offset, flat.len(), "flat parameter length mismatch");
    }

    fn scale(&mut self, s: f64) {
        self.visit_mut(&mut |t| t.iter_mut().for_each(|x| *x *= s));
    }

    fn zero(&mut self) {
        self.scale(0.0);
    }
}

/// `target ← tau · online + (1 − tau) · target`.
pub fn soft_update<P: Params>(target: &mut P, online: &P, tau: f64) {
    let src = online.to_flat();
    let mut offset = 0;
    target.visit_mut(&mut |t| {
        for x in t.iter_mut() {
            *x = tau * src[offset] + (1.0 - tau) * *x;
            offset += 1;
        }
    });
    assert_eq!(offset, src.len(), "soft update between mismatched networks");
}

/// Euclidean distance between two parameter sets of the same layout.
pub fn param_distance<P: Params>(a: &P, b: &P) -> f64 {
    a.to_flat()
        .iter()
        .zip(b.to_flat())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl<P: Params> Params for Vec<P> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        for (i, p) in self.iter().enumerate() {
            p.visit(&format!("{prefix}{i}."), f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for p in self.iter_mut() {
            p.visit_mut(f);
        }
    }
}
