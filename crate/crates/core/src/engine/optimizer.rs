use super::config::Optimizer;
use crate::fields::DisplacementField;
use crate::grids::gaussian_smooth;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Give up once the step has been halved below this fraction of its starting value.
const MIN_STEP_FRACTION: f64 = 1e-3;
const STEP_GROWTH: f64 = 1.25;

/// First and second Adam moments of one block.
type Moments = (Vec<[f64; 3]>, Vec<[f64; 3]>);

#[derive(Debug, Clone, Default)]
pub(crate) struct DescentTrace {
    /// Loss at entry followed by the loss after every accepted step.
    pub losses: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

pub(crate) struct DescentSettings {
    pub iters: usize,
    pub step: f64,
    pub optimizer: Optimizer,
    pub smoothing: f64,
}

fn smooth_field(g: &DisplacementField, sigma: f64) -> Vec<[f64; 3]> {
    if sigma <= 0.0 {
        return g.vectors().to_vec();
    }
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|c| gaussian_smooth(&g.component(c), g.dims(), sigma))
        .collect();
    (0..g.dims().len())
        .map(|i| [comps[0][i], comps[1][i], comps[2][i]])
        .collect()
}

/// Scale so the largest `reach[k] * |dir_k|` is one. False if there is nothing to scale.
fn normalize(dirs: &mut [Vec<[f64; 3]>], reach: &[f64]) -> bool {
    let norm = dirs
        .iter()
        .zip(reach)
        .map(|(d, r)| r * d.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(0.0f64, f64::max);
    if !(norm.is_finite() && norm > 0.0) {
        return false;
    }
    dirs.iter_mut()
        .flatten()
        .flatten()
        .for_each(|v| *v /= norm);
    true
}

/// Minimize over several displacement blocks with an accept-if-better rule.
///
/// Each iteration smooths the gradient, rescales it so the largest update (after
/// multiplying block `k` by `reach[k]`) equals the current step, and only keeps the
/// move if the loss strictly drops; otherwise the step is halved and retried.
/// Accepted moves let the step grow back towards its initial value.
/// `objective` returns the loss and, when asked, one gradient per block.
pub(crate) fn descend<F>(
    params: &mut [DisplacementField],
    reach: &[f64],
    settings: &DescentSettings,
    mut objective: F,
) -> DescentTrace
where
    F: FnMut(&[DisplacementField], bool) -> (f64, Option<Vec<DisplacementField>>),
{
    let mut trace = DescentTrace::default();
    let (mut loss, grad) = objective(params, true);
    let mut grad = grad.expect("gradient requested");
    trace.losses.push(loss);

    let mut step = settings.step;
    let min_step = settings.step * MIN_STEP_FRACTION;
    let mut moments: Vec<Moments> = params
        .iter()
        .map(|p| (vec![[0.0; 3]; p.dims().len()], vec![[0.0; 3]; p.dims().len()]))
        .collect();

    for it in 0..settings.iters {
        let mut dirs: Vec<Vec<[f64; 3]>> = grad
            .iter()
            .map(|g| smooth_field(g, settings.smoothing))
            .collect();
        if !normalize(&mut dirs, reach) {
            break;
        }

        if settings.optimizer == Optimizer::AdaptiveMoment {
            let t = (it + 1) as i32;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            for (d, (m, v)) in dirs.iter_mut().zip(moments.iter_mut()) {
                for ((dv, mv), vv) in d.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()) {
                    for c in 0..3 {
                        mv[c] = ADAM_BETA1 * mv[c] + (1.0 - ADAM_BETA1) * dv[c];
                        vv[c] = ADAM_BETA2 * vv[c] + (1.0 - ADAM_BETA2) * dv[c] * dv[c];
                        dv[c] = (mv[c] / c1) / ((vv[c] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
            normalize(&mut dirs, reach);
        }

        loop {
            let candidate: Vec<DisplacementField> = params
                .iter()
                .zip(&dirs)
                .map(|(p, d)| {
                    let mut c = p.clone();
                    for (v, dv) in c.vectors_mut().iter_mut().zip(d) {
                        for k in 0..3 {
                            v[k] -= step * dv[k];
                        }
                    }
                    c
                })
                .collect();
            let (cand_loss, cand_grad) = objective(&candidate, true);
            if cand_loss < loss {
                params.clone_from_slice(&candidate);
                loss = cand_loss;
                grad = cand_grad.expect("gradient requested");
                trace.losses.push(loss);
                trace.accepted += 1;
                step = (step * STEP_GROWTH).min(settings.step);
                break;
            }
            trace.rejected += 1;
            step *= 0.5;
            if step < min_step {
                return trace;
            }
        }
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Quadratic bowl centred on a known field.
    fn bowl(target: &DisplacementField) -> impl FnMut(&[DisplacementField], bool) -> (f64, Option<Vec<DisplacementField>>) + '_ {
        move |p, want| {
            let f = &p[0];
            let mut loss = 0.0;
            let mut g = vec![[0.0; 3]; f.dims().len()];
            for ((v, t), gv) in f.vectors().iter().zip(target.vectors()).zip(g.iter_mut()) {
                for c in 0..3 {
                    let d = v[c] - t[c];
                    loss += d * d;
                    gv[c] = 2.0 * d;
                }
            }
            (
                loss,
                want.then(|| vec![DisplacementField::new(f.dims(), g).unwrap()]),
            )
        }
    }

    #[test]
    fn converges_and_trace_is_monotone() {
        let target = DisplacementField::constant([4, 4, 4], [1.0, -0.5, 0.25]);
        for optimizer in [Optimizer::GradientDescent, Optimizer::AdaptiveMoment] {
            let mut params = vec![DisplacementField::zeros([4, 4, 4])];
            let settings = DescentSettings {
                iters: 200,
                step: 0.3,
                optimizer,
                smoothing: 0.0,
            };
            let trace = descend(&mut params, &[1.0], &settings, bowl(&target));
            assert!(trace.losses.windows(2).all(|w| w[1] < w[0]));
            assert!(*trace.losses.last().unwrap() < 1e-3 * trace.losses[0], "{optimizer:?}");
        }
    }
}
