use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid camera-to-world transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

/// Tangent-space pose increment: three rotation components (applied through
/// the exponential map, right-multiplied) and three translation components.
pub type PoseDelta = [f64; 6];

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// `self` then `other` in `self`'s frame: world_T_a * a_T_b.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rot_inv = self.rotation.inverse();
        Pose {
            rotation: rot_inv,
            translation: -(rot_inv * self.translation),
        }
    }

    #[inline]
    pub fn transform_point(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn rotate(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Apply a tangent increment: rotation right-multiplied by exp of the
    /// axis-angle part, translation added, quaternion renormalized.
    pub fn apply_delta(&self, delta: &PoseDelta) -> Pose {
        let axis = Vector3::new(delta[0], delta[1], delta[2]);
        let rotation = UnitQuaternion::from_quaternion(
            (self.rotation * UnitQuaternion::from_scaled_axis(axis)).into_inner(),
        );
        Pose {
            rotation,
            translation: self.translation + Vector3::new(delta[3], delta[4], delta[5]),
        }
    }

    /// The increment taking `self` to `target` under [`Pose::apply_delta`].
    pub fn delta_to(&self, target: &Pose) -> PoseDelta {
        let dr = (self.rotation.inverse() * target.rotation).scaled_axis();
        let dt = target.translation - self.translation;
        [dr.x, dr.y, dr.z, dt.x, dt.y, dt.z]
    }

    /// Rotation angle between two poses, radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        self.rotation.angle_to(&other.rotation)
    }

    pub fn translation_distance_to(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

/// Constant-velocity extrapolation: the motion from `prev` to `last`,
/// replayed once onto `last`.
pub fn extrapolate(prev: &Pose, last: &Pose) -> Pose {
    let step = prev.inverse().compose(last);
    last.compose(&step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose<R: Rng>(rng: &mut R) -> Pose {
        let axis = Vector3::new(rng.random::<f64>(), rng.random(), rng.random()) * 2.0 -
            Vector3::new(1.0, 1.0, 1.0);
        Pose {
            rotation: UnitQuaternion::from_scaled_axis(axis),
            translation: Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ),
        }
    }

    #[test]
    fn zero_delta_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = random_pose(&mut rng);
        let q = p.apply_delta(&[0.0; 6]);
        assert_eq!(p.translation, q.translation);
        assert!(p.rotation.angle_to(&q.rotation) < 1e-15);
    }

    #[test]
    fn pi_twice_returns_to_start() {
        let p = Pose::identity();
        let half = [0.0, 0.0, std::f64::consts::PI, 0.0, 0.0, 0.0];
        let q = p.apply_delta(&half).apply_delta(&half);
        assert!(q.rotation.angle_to(&p.rotation) < 1e-12);
    }

    #[test]
    fn delta_roundtrip_recovers_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let d = a.delta_to(&b);
            let b2 = a.apply_delta(&d);
            assert!(b2.rotation.angle_to(&b.rotation) < 1e-9);
            assert!((b2.translation - b.translation).norm() < 1e-9);
        }
    }

    #[test]
    fn compose_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let p = random_pose(&mut rng);
            let id = p.compose(&p.inverse());
            assert!(id.translation.norm() < 1e-12);
            assert!(id.rotation.angle_to(&UnitQuaternion::identity()) < 1e-12);
        }
    }

    #[test]
    fn constant_velocity_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = random_pose(&mut rng);
        let p1 = random_pose(&mut rng);
        let init = extrapolate(&p0, &p1);
        let want = p1.compose(&p0.inverse().compose(&p1));
        assert!((init.translation - want.translation).norm() < 1e-12);
        assert!(init.rotation.angle_to(&want.rotation) < 1e-12);
    }
}
