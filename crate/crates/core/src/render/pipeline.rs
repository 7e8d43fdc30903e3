//! Batched ray rendering with a fused backward pass.
//!
//! A batch is prepared once (per-ray sample placement, which depends on the
//! scene bounds and measured depths) and can then be evaluated repeatedly:
//! forward for rendering, or forward+backward producing gradients for every
//! map parameter and per-pose tangent increments. Keeping sampling separate
//! makes the gradient path exact for a fixed sample set, which is also what
//! the finite-difference checks rely on.
//!
//! Two cost controls shape the inner loop: rays stop evaluating once the
//! transmittance has collapsed and the sample lies past the depth-supervision
//! band, and the appearance branch only runs where compositing weights are
//! non-negligible.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::field::{Branch, PyramidScratch};
use crate::loss::{classify_sample, LossConfig, LossParts, SampleBand};
use crate::map::{MapGrads, SceneMap};
use crate::render::{
    density, density_derivatives, weights_backward, weights_from_densities, RayEstimate,
    RenderError, SampleConfig, MIN_RAY_T,
};
use crate::slam::Pose;

/// One supervised pixel ray.
#[derive(Debug, Clone, Copy)]
pub struct RaySpec {
    /// Index into the pose slice passed alongside the batch.
    pub pose_index: usize,
    /// Unit direction in the camera frame.
    pub dir_cam: Vector3<f64>,
    /// Observed color in [0, 1].
    pub color: [f64; 3],
    /// Measured range along the ray in meters; non-positive or non-finite
    /// means no measurement.
    pub depth: f64,
}

impl RaySpec {
    #[inline]
    pub fn has_depth(&self) -> bool {
        self.depth.is_finite() && self.depth > MIN_RAY_T
    }
}

/// Which gradients an evaluation produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMode {
    /// Forward only.
    None,
    /// Map parameters and poses.
    Full,
    /// Poses only; map parameter gradients are skipped (tracking).
    PoseOnly,
}

/// A batch with frozen sample placements.
pub struct PreparedBatch {
    entries: Vec<PreparedRay>,
    /// Rays that hit the bounds.
    pub rendered: usize,
    /// Of those, rays with a valid depth measurement.
    pub valid_depth: usize,
    /// Size of the original ray slice (missed rays included).
    pub total: usize,
}

struct PreparedRay {
    ray_index: usize,
    spec: RaySpec,
    ts: Vec<f64>,
}

/// Deterministic per-ray stream derived from a batch seed (splitmix64).
#[inline]
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Place samples for every ray. Rays that miss the scene bounds are dropped
/// (their indices simply do not appear in the prepared batch).
pub fn prepare_batch(
    map: &SceneMap,
    poses: &[Pose],
    rays: &[RaySpec],
    sample_cfg: &SampleConfig,
    seed: u64,
) -> PreparedBatch {
    use rand::SeedableRng;
    let bounds = *map.bounds();
    let entries: Vec<PreparedRay> = rays
        .iter()
        .enumerate()
        .filter_map(|(i, spec)| {
            let pose = &poses[spec.pose_index];
            let origin = pose.translation;
            let dir = pose.rotate(spec.dir_cam);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
            let depth = spec.has_depth().then_some(spec.depth);
            let samples =
                crate::render::sample_ray(origin, dir, depth, &bounds, sample_cfg, &mut rng);
            if samples.is_empty() {
                return None;
            }
            Some(PreparedRay {
                ray_index: i,
                spec: *spec,
                ts: samples.iter().map(|s| s.t).collect(),
            })
        })
        .collect();
    let rendered = entries.len();
    let valid_depth = entries.iter().filter(|e| e.spec.has_depth()).count();
    PreparedBatch {
        entries,
        rendered,
        valid_depth,
        total: rays.len(),
    }
}

/// Loss values of one evaluated batch.
#[derive(Debug, Clone, Copy)]
pub struct BatchEval {
    pub parts: LossParts,
    pub total: f64,
    pub rendered: usize,
    pub valid_depth: usize,
}

/// Gradients of the batch loss.
pub struct BatchGrads {
    /// Map parameter gradients; absent in pose-only mode.
    pub map: Option<MapGrads>,
    /// One tangent increment gradient per pose slot.
    pub poses: Vec<[f64; 6]>,
}

struct RayAccum {
    parts: LossParts,
    grads: Option<BatchGrads>,
}

/// Compositing weights below this carry no visible color or gradient; the
/// appearance branch is skipped for such samples.
const WEIGHT_EPSILON: f64 = 1e-9;

/// Transmittance below this, past the supervision band, ends the ray.
const TRANSMITTANCE_EPSILON: f64 = 1e-10;

/// Scratch buffers reused across the rays of one chunk.
struct RayWorkspace {
    scratch: PyramidScratch,
    geo_feat: Vec<f64>,
    app_feat: Vec<f64>,
    geo_hidden: Vec<f64>,
    app_hidden: Vec<f64>,
    sdf: Vec<f64>,
    sigma: Vec<f64>,
    colors: Vec<[f64; 3]>,
    weights: Vec<f64>,
    weight_grad: Vec<f64>,
    sigma_grad: Vec<f64>,
    sdf_grad: Vec<f64>,
    feat_grad: Vec<f64>,
}

impl RayWorkspace {
    fn new() -> Self {
        Self {
            scratch: PyramidScratch::default(),
            geo_feat: Vec::new(),
            app_feat: Vec::new(),
            geo_hidden: Vec::new(),
            app_hidden: Vec::new(),
            sdf: Vec::new(),
            sigma: Vec::new(),
            colors: Vec::new(),
            weights: Vec::new(),
            weight_grad: Vec::new(),
            sigma_grad: Vec::new(),
            sdf_grad: Vec::new(),
            feat_grad: Vec::new(),
        }
    }

    fn resize(&mut self, n: usize, wg: usize, wa: usize, hidden: usize) {
        self.geo_feat.resize(n * wg, 0.0);
        self.app_feat.resize(n * wa, 0.0);
        self.geo_hidden.resize(n * hidden, 0.0);
        self.app_hidden.resize(n * hidden, 0.0);
        self.sdf.resize(n, 0.0);
        self.sigma.resize(n, 0.0);
        self.colors.resize(n, [0.0; 3]);
        self.weights.clear();
        self.weight_grad.resize(n, 0.0);
        self.sigma_grad.resize(n, 0.0);
        self.sdf_grad.resize(n, 0.0);
        self.feat_grad.resize(wg.max(wa), 0.0);
    }
}

/// Forward pass for one prepared ray. Returns the evaluated sample count:
/// once transmittance collapses past the supervision band the rest of the
/// ray cannot influence anything.
fn forward_ray(
    map: &SceneMap,
    pose: &Pose,
    entry: &PreparedRay,
    truncation: f64,
    ws: &mut RayWorkspace,
) -> usize {
    let n = entry.ts.len();
    let wg = map.pyramid.feature_width(Branch::Geometry);
    let wa = map.pyramid.feature_width(Branch::Appearance);
    let hidden = map.geo_decoder.hidden_width;
    ws.resize(n, wg, wa, hidden);

    let origin = pose.translation;
    let dir = pose.rotate(entry.spec.dir_cam);
    let beta = map.beta.beta();
    let supervised_until = if entry.spec.has_depth() {
        entry.spec.depth + truncation
    } else {
        f64::NEG_INFINITY
    };

    let mut n_eff = 0;
    let mut transmittance = 1.0;
    for (i, &t) in entry.ts.iter().enumerate() {
        let p = origin + dir * t;
        let gf = &mut ws.geo_feat[i * wg..(i + 1) * wg];
        map.pyramid.query_into(p, Branch::Geometry, gf, &mut ws.scratch);
        let mut out = [0.0];
        map.geo_decoder.forward_into(
            gf,
            &mut ws.geo_hidden[i * hidden..(i + 1) * hidden],
            &mut out,
        );
        ws.sdf[i] = out[0];
        ws.sigma[i] = density(out[0], beta);
        transmittance *= (-ws.sigma[i]).exp();
        n_eff = i + 1;
        if transmittance < TRANSMITTANCE_EPSILON && t > supervised_until {
            break;
        }
    }
    weights_from_densities(&ws.sigma[..n_eff], &mut ws.weights);

    for i in 0..n_eff {
        if ws.weights[i] <= WEIGHT_EPSILON {
            ws.colors[i] = [0.0; 3];
            continue;
        }
        let p = origin + dir * entry.ts[i];
        let af = &mut ws.app_feat[i * wa..(i + 1) * wa];
        map.pyramid
            .query_into(p, Branch::Appearance, af, &mut ws.scratch);
        let mut rgb = [0.0; 3];
        map.app_decoder.forward_into(
            af,
            &mut ws.app_hidden[i * hidden..(i + 1) * hidden],
            &mut rgb,
        );
        ws.colors[i] = rgb;
    }
    n_eff
}

fn composite_from_workspace(ws: &RayWorkspace, ts: &[f64]) -> ([f64; 3], f64) {
    let mut color = [0.0; 3];
    let mut depth = 0.0;
    for i in 0..ts.len() {
        let w = ws.weights[i];
        color[0] += w * ws.colors[i][0];
        color[1] += w * ws.colors[i][1];
        color[2] += w * ws.colors[i][2];
        depth += w * ts[i];
    }
    (color, depth)
}

/// Evaluate a prepared batch, optionally with gradients.
pub fn evaluate_prepared(
    map: &SceneMap,
    poses: &[Pose],
    batch: &PreparedBatch,
    loss_cfg: &LossConfig,
    mode: GradMode,
) -> Result<(BatchEval, Option<BatchGrads>), RenderError> {
    if batch.entries.is_empty() {
        return Err(RenderError::EmptyBatch);
    }
    let inv_rendered = 1.0 / batch.rendered as f64;
    let inv_valid = if batch.valid_depth > 0 {
        1.0 / batch.valid_depth as f64
    } else {
        0.0
    };

    // Fixed chunk size keeps the reduction order independent of the worker
    // count, so results are reproducible for a given batch.
    const CHUNK: usize = 512;
    let chunks: Vec<&[PreparedRay]> = batch.entries.chunks(CHUNK).collect();

    let mk_grads = |mode: GradMode| -> Option<BatchGrads> {
        match mode {
            GradMode::None => None,
            GradMode::Full => Some(BatchGrads {
                map: Some(MapGrads::zeros_like(map)),
                poses: vec![[0.0; 6]; poses.len()],
            }),
            GradMode::PoseOnly => Some(BatchGrads {
                map: None,
                poses: vec![[0.0; 6]; poses.len()],
            }),
        }
    };

    let partials: Vec<RayAccum> = chunks
        .par_iter()
        .map(|chunk| {
            let mut ws = RayWorkspace::new();
            let mut acc = RayAccum {
                parts: LossParts::default(),
                grads: mk_grads(mode),
            };
            for entry in *chunk {
                process_ray(
                    map,
                    poses,
                    entry,
                    loss_cfg,
                    inv_rendered,
                    inv_valid,
                    &mut ws,
                    &mut acc,
                );
            }
            acc
        })
        .collect();

    let mut parts = LossParts::default();
    let mut grads = mk_grads(mode);
    for p in partials {
        parts.color += p.parts.color;
        parts.depth += p.parts.depth;
        parts.freespace += p.parts.freespace;
        parts.sdf_center += p.parts.sdf_center;
        parts.sdf_tail += p.parts.sdf_tail;
        if let (Some(dst), Some(src)) = (grads.as_mut(), p.grads.as_ref()) {
            if let (Some(dm), Some(sm)) = (dst.map.as_mut(), src.map.as_ref()) {
                dm.accumulate(sm);
            }
            for (d, s) in dst.poses.iter_mut().zip(&src.poses) {
                for k in 0..6 {
                    d[k] += s[k];
                }
            }
        }
    }

    let eval = BatchEval {
        parts,
        total: crate::loss::total_loss(&parts, loss_cfg),
        rendered: batch.rendered,
        valid_depth: batch.valid_depth,
    };
    Ok((eval, grads))
}

#[allow(clippy::too_many_arguments)]
fn process_ray(
    map: &SceneMap,
    poses: &[Pose],
    entry: &PreparedRay,
    loss_cfg: &LossConfig,
    inv_rendered: f64,
    inv_valid: f64,
    ws: &mut RayWorkspace,
    acc: &mut RayAccum,
) {
    let pose = &poses[entry.spec.pose_index];
    let n = forward_ray(map, pose, entry, loss_cfg.truncation, ws);
    let ts = &entry.ts[..n];
    let (chat, dhat) = composite_from_workspace(ws, ts);

    // --- forward losses -----------------------------------------------------
    let obs = entry.spec.color;
    let cerr = [chat[0] - obs[0], chat[1] - obs[1], chat[2] - obs[2]];
    acc.parts.color += (cerr[0] * cerr[0] + cerr[1] * cerr[1] + cerr[2] * cerr[2]) * inv_rendered;

    let has_depth = entry.spec.has_depth();
    let measured = entry.spec.depth;
    let mut n_fs = 0usize;
    let mut n_center = 0usize;
    let mut n_tail = 0usize;
    if has_depth {
        let derr = dhat - measured;
        acc.parts.depth += derr * derr * inv_valid;

        let mut fs = 0.0;
        let mut center = 0.0;
        let mut tail = 0.0;
        for i in 0..n {
            let z = ts[i];
            let target = (measured - z) / loss_cfg.truncation;
            match classify_sample(z, measured, loss_cfg) {
                SampleBand::FreeSpace => {
                    let r = ws.sdf[i] - 1.0;
                    fs += r * r;
                    n_fs += 1;
                }
                SampleBand::Center => {
                    let r = ws.sdf[i] - target;
                    center += r * r;
                    n_center += 1;
                }
                SampleBand::Tail => {
                    let r = ws.sdf[i] - target;
                    tail += r * r;
                    n_tail += 1;
                }
                SampleBand::Occluded => {}
            }
        }
        if n_fs > 0 {
            acc.parts.freespace += fs / n_fs as f64 * inv_valid;
        }
        if n_center > 0 {
            acc.parts.sdf_center += center / n_center as f64 * inv_valid;
        }
        if n_tail > 0 {
            acc.parts.sdf_tail += tail / n_tail as f64 * inv_valid;
        }
    }

    let Some(grads) = acc.grads.as_mut() else {
        return;
    };

    // --- backward ------------------------------------------------------------
    let gc = [
        loss_cfg.color_weight * 2.0 * cerr[0] * inv_rendered,
        loss_cfg.color_weight * 2.0 * cerr[1] * inv_rendered,
        loss_cfg.color_weight * 2.0 * cerr[2] * inv_rendered,
    ];
    let gd = if has_depth {
        loss_cfg.depth_weight * 2.0 * (dhat - measured) * inv_valid
    } else {
        0.0
    };

    for i in 0..n {
        ws.weight_grad[i] = gc[0] * ws.colors[i][0]
            + gc[1] * ws.colors[i][1]
            + gc[2] * ws.colors[i][2]
            + gd * ts[i];
    }
    ws.sigma_grad[..n].fill(0.0);
    weights_backward(&ws.sigma[..n], &ws.weight_grad[..n], &mut ws.sigma_grad[..n]);

    let beta = map.beta.beta();
    let mut g_log_beta = 0.0;
    for i in 0..n {
        let (d_s, d_logb) = density_derivatives(ws.sdf[i], beta);
        ws.sdf_grad[i] = ws.sigma_grad[i] * d_s;
        g_log_beta += ws.sigma_grad[i] * d_logb;
        if has_depth {
            let z = ts[i];
            let target = (measured - z) / loss_cfg.truncation;
            match classify_sample(z, measured, loss_cfg) {
                SampleBand::FreeSpace => {
                    ws.sdf_grad[i] += loss_cfg.freespace_weight
                        * 2.0
                        * (ws.sdf[i] - 1.0)
                        * inv_valid
                        / n_fs as f64;
                }
                SampleBand::Center => {
                    ws.sdf_grad[i] += loss_cfg.sdf_center_weight
                        * 2.0
                        * (ws.sdf[i] - target)
                        * inv_valid
                        / n_center as f64;
                }
                SampleBand::Tail => {
                    ws.sdf_grad[i] += loss_cfg.sdf_tail_weight
                        * 2.0
                        * (ws.sdf[i] - target)
                        * inv_valid
                        / n_tail as f64;
                }
                SampleBand::Occluded => {}
            }
        }
    }
    if let Some(map_grads) = grads.map.as_mut() {
        map_grads.log_beta += g_log_beta;
    }

    // per-sample backward through the decoders, fields and pose
    let wg = map.pyramid.feature_width(Branch::Geometry);
    let wa = map.pyramid.feature_width(Branch::Appearance);
    let hidden = map.geo_decoder.hidden_width;
    let origin = pose.translation;
    let dir = pose.rotate(entry.spec.dir_cam);
    let rot_inv = pose.rotation.inverse();
    let pose_grad = &mut grads.poses[entry.spec.pose_index];
    for i in 0..n {
        let t = ts[i];
        let p = origin + dir * t;
        let mut point_grad = Vector3::zeros();

        // geometry head; occluded samples behind the surface carry sub-epsilon
        // responsibility and are skipped
        let gs = ws.sdf_grad[i];
        if gs.abs() > 1e-14 {
            let gf = &ws.geo_feat[i * wg..(i + 1) * wg];
            let gh = &ws.geo_hidden[i * hidden..(i + 1) * hidden];
            ws.feat_grad[..wg].fill(0.0);
            match grads.map.as_mut() {
                Some(map_grads) => {
                    map.geo_decoder.backward(
                        gf,
                        gh,
                        &[ws.sdf[i]],
                        &[gs],
                        &mut map_grads.geo_decoder,
                        &mut ws.feat_grad[..wg],
                    );
                    map.pyramid.backward(
                        p,
                        Branch::Geometry,
                        &ws.feat_grad[..wg],
                        &mut map_grads.pyramid,
                        &mut point_grad,
                        &mut ws.scratch,
                    );
                }
                None => {
                    map.geo_decoder.backward_input_only(
                        gh,
                        &[ws.sdf[i]],
                        &[gs],
                        &mut ws.feat_grad[..wg],
                    );
                    map.pyramid.backward_point_only(
                        p,
                        Branch::Geometry,
                        &ws.feat_grad[..wg],
                        &mut point_grad,
                        &mut ws.scratch,
                    );
                }
            }
        }

        // appearance head (skipped samples never ran the forward pass)
        let w = ws.weights[i];
        let cup = [gc[0] * w, gc[1] * w, gc[2] * w];
        if w > WEIGHT_EPSILON && cup != [0.0, 0.0, 0.0] {
            let af = &ws.app_feat[i * wa..(i + 1) * wa];
            let ah = &ws.app_hidden[i * hidden..(i + 1) * hidden];
            ws.feat_grad[..wa].fill(0.0);
            match grads.map.as_mut() {
                Some(map_grads) => {
                    map.app_decoder.backward(
                        af,
                        ah,
                        &ws.colors[i],
                        &cup,
                        &mut map_grads.app_decoder,
                        &mut ws.feat_grad[..wa],
                    );
                    map.pyramid.backward(
                        p,
                        Branch::Appearance,
                        &ws.feat_grad[..wa],
                        &mut map_grads.pyramid,
                        &mut point_grad,
                        &mut ws.scratch,
                    );
                }
                None => {
                    map.app_decoder.backward_input_only(
                        ah,
                        &ws.colors[i],
                        &cup,
                        &mut ws.feat_grad[..wa],
                    );
                    map.pyramid.backward_point_only(
                        p,
                        Branch::Appearance,
                        &ws.feat_grad[..wa],
                        &mut point_grad,
                        &mut ws.scratch,
                    );
                }
            }
        }

        // pose: p = translation + dt + t * R * exp(dr) * dir_cam
        pose_grad[3] += point_grad.x;
        pose_grad[4] += point_grad.y;
        pose_grad[5] += point_grad.z;
        let local = rot_inv * point_grad;
        let rotational = entry.spec.dir_cam.cross(&local) * t;
        pose_grad[0] += rotational.x;
        pose_grad[1] += rotational.y;
        pose_grad[2] += rotational.z;
    }
}

/// Sample and evaluate in one call.
pub fn evaluate_batch(
    map: &SceneMap,
    poses: &[Pose],
    rays: &[RaySpec],
    loss_cfg: &LossConfig,
    sample_cfg: &SampleConfig,
    seed: u64,
    mode: GradMode,
) -> Result<(BatchEval, Option<BatchGrads>), RenderError> {
    let batch = prepare_batch(map, poses, rays, sample_cfg, seed);
    evaluate_prepared(map, poses, &batch, loss_cfg, mode)
}

/// Render a batch of rays, returning one estimate per input ray (None when
/// the ray missed the scene bounds). Errors only if every ray missed.
pub fn render_rays(
    map: &SceneMap,
    poses: &[Pose],
    rays: &[RaySpec],
    sample_cfg: &SampleConfig,
    seed: u64,
) -> Result<Vec<Option<RayEstimate>>, RenderError> {
    let batch = prepare_batch(map, poses, rays, sample_cfg, seed);
    if batch.entries.is_empty() {
        return Err(RenderError::EmptyBatch);
    }
    let mut out: Vec<Option<RayEstimate>> = vec![None; rays.len()];
    let results: Vec<(usize, RayEstimate)> = batch
        .entries
        .par_chunks(512)
        .map(|chunk| {
            let mut ws = RayWorkspace::new();
            let mut res = Vec::with_capacity(chunk.len());
            for entry in chunk {
                let pose = &poses[entry.spec.pose_index];
                let n = forward_ray(map, pose, entry, sample_cfg.truncation, &mut ws);
                let (color, depth) = composite_from_workspace(&ws, &entry.ts[..n]);
                res.push((
                    entry.ray_index,
                    RayEstimate {
                        color,
                        depth,
                        weights: ws.weights[..n].to_vec(),
                        sdf: ws.sdf[..n].to_vec(),
                        sample_depths: entry.ts[..n].to_vec(),
                    },
                ));
            }
            res
        })
        .flatten()
        .collect();
    for (idx, est) in results {
        out[idx] = Some(est);
    }
    Ok(out)
}
