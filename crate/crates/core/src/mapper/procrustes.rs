//! Rigid 2-D alignment (rotation or reflection plus translation).

/// Orthogonal map `p -> R p + t` in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub cos: f64,
    pub sin: f64,
    pub reflect: bool,
    pub translation: [f64; 2],
}

impl RigidTransform {
    pub const IDENTITY: Self = Self {
        cos: 1.0,
        sin: 0.0,
        reflect: false,
        translation: [0.0, 0.0],
    };

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = if self.reflect { (p[0], -p[1]) } else { (p[0], p[1]) };
        [
            self.cos * x - self.sin * y + self.translation[0],
            self.sin * x + self.cos * y + self.translation[1],
        ]
    }
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p[0]).sum();
    let sy: f64 = points.iter().map(|p| p[1]).sum();
    [sx / n, sy / n]
}

/// Transform minimizing `sum |T(source_i) - target_i|^2` over rotations,
/// reflections and translations. Pairs are matched by position.
pub fn fit(source: &[[f64; 2]], target: &[[f64; 2]]) -> RigidTransform {
    assert_eq!(source.len(), target.len());
    if source.is_empty() {
        return RigidTransform::IDENTITY;
    }
    let (cs, ct) = (centroid(source), centroid(target));
    let best_rotation = |reflect: bool| {
        let (mut c, mut s) = (0.0, 0.0);
        for (a, b) in source.iter().zip(target) {
            let ax = a[0] - cs[0];
            let ay = if reflect { -(a[1] - cs[1]) } else { a[1] - cs[1] };
            let (bx, by) = (b[0] - ct[0], b[1] - ct[1]);
            c += ax * bx + ay * by;
            s += ax * by - ay * bx;
        }
        let score = c.hypot(s);
        let (cos, sin) = if score > 0.0 { (c / score, s / score) } else { (1.0, 0.0) };
        (score, cos, sin)
    };
    let (rot_score, rc, rs) = best_rotation(false);
    let (ref_score, fc, fs) = best_rotation(true);
    let (cos, sin, reflect) = if ref_score > rot_score * (1.0 + 1e-12) {
        (fc, fs, true)
    } else {
        (rc, rs, false)
    };
    let mut t = RigidTransform {
        cos,
        sin,
        reflect,
        translation: [0.0, 0.0],
    };
    let moved = t.apply(cs);
    t.translation = [ct[0] - moved[0], ct[1] - moved[1]];
    t
}

pub fn sum_sq_displacement(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_rotation_and_reflection() {
        let src = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]];
        for reflect in [false, true] {
            let truth = RigidTransform {
                cos: 0.6,
                sin: 0.8,
                reflect,
                translation: [5.0, -2.0],
            };
            let dst: Vec<_> = src.iter().map(|p| truth.apply(*p)).collect();
            let t = fit(&src, &dst);
            let moved: Vec<_> = src.iter().map(|p| t.apply(*p)).collect();
            assert!(sum_sq_displacement(&moved, &dst) < 1e-20);
            assert_eq!(t.reflect, reflect);
        }
    }

    #[test]
    fn identity_for_equal_sets() {
        let pts = [[0.3, -1.0], [2.0, 0.5], [-1.0, 4.0]];
        let t = fit(&pts, &pts);
        assert_eq!((t.cos, t.sin, t.reflect), (1.0, 0.0, false));
        for p in pts {
            let q = t.apply(p);
            assert!((q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12);
        }
    }
}
