use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{shortening_step_from, tau_bounds, vertex_slide, FlowOptions};
use crate::geometry::Metric;
use crate::paths::{break_structure, energy, reparam_constant_speed, segment_sq, DiscretePath};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::verify::{certify_geodesic, GeodesicCertificate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepEvent {
    Accepted,
    Rejected,
}

impl StepEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            StepEvent::Accepted => "accepted",
            StepEvent::Rejected => "rejected",
        }
    }
}

/// One shortening iteration. `energy` is the energy after the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry<T> {
    pub iteration: usize,
    pub energy: T,
    pub step: T,
    pub event: StepEvent,
}

/// An accepted vertex slide, with the bounds the break parameter must satisfy
/// at the pre-slide energy level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlideEvent<T> {
    pub iteration: usize,
    pub break_index: usize,
    pub tau_before: T,
    pub tau_after: T,
    pub sigma: T,
    pub energy_before: T,
    pub energy_after: T,
    pub lo: T,
    pub hi: T,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport<T> {
    pub trace: Vec<TraceEntry<T>>,
    pub accepted: usize,
    pub rejected: usize,
    pub vertex_slides: Vec<SlideEvent<T>>,
    pub converged: bool,
    pub final_certificate: GeodesicCertificate<T>,
}

impl<T: Real> FlowReport<T> {
    pub fn energy_trace(&self) -> Vec<T> {
        self.trace.iter().map(|e| e.energy).collect()
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string(self).expect("flow report serializes")
    }

    /// Writes `iteration,energy,step,event` rows.
    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("trace write failed: {e}"));
        w.write_record(["iteration", "energy", "step", "event"]).map_err(io)?;
        for t in &self.trace {
            w.write_record([
                t.iteration.to_string(),
                format!("{:.16e}", to_f64(t.energy)),
                format!("{:.16e}", to_f64(t.step)),
                t.event.as_str().to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("trace write failed: {e}")))
    }
}

/// Alternates vertex slides and preconditioned shortening steps until the
/// constant-speed resampling of the iterate certifies at `opts.tol_residual`
/// or the iteration budget runs out.
///
/// Every `check_every` iterations, and whenever a shortening step fails to
/// find sufficient decrease, the iterate is resampled to constant speed and
/// certified. A failed step followed by a resampling that does not lower the
/// energy ends the run unconverged.
pub fn flow_to_geodesic<T: Real>(
    path: &DiscretePath<T>,
    metric: &Metric<T>,
    opts: &FlowOptions<T>,
) -> Result<(DiscretePath<T>, FlowReport<T>)> {
    opts.validate()?;
    let mut path = path.clone();
    let mut e = energy(&path, metric)?;
    let mut trace = Vec::new();
    let mut slides = Vec::new();
    let (mut accepted, mut rejected) = (0, 0);
    let mut last_step = opts.step0;
    let check_every = opts.check_every.max(1);

    let finish = |path: DiscretePath<T>, trace, slides, accepted, rejected, converged| {
        let cert = certify_geodesic(&path, metric, opts.tol_residual);
        let report = FlowReport { trace, accepted, rejected, vertex_slides: slides, converged, final_certificate: cert };
        Ok((path, report))
    };

    for iter in 0..opts.max_iters {
        if let Some((captured, e1)) = cone_capture(&path, metric, e) {
            path = captured;
            e = e1;
        }
        slide_all(&mut path, &mut e, metric, iter, &mut slides);

        let hint = opts.step0.min(last_step + last_step);
        let out = shortening_step_from(&path, metric, opts, e, hint)?;
        if out.accepted {
            accepted += 1;
            path = out.path;
            e = out.energy;
            last_step = out.step;
            trace.push(TraceEntry { iteration: iter, energy: e, step: out.step, event: StepEvent::Accepted });
        } else {
            rejected += 1;
            trace.push(TraceEntry { iteration: iter, energy: e, step: out.step, event: StepEvent::Rejected });
        }

        if out.accepted && (iter + 1) % check_every != 0 {
            continue;
        }
        match reparam_constant_speed(&path, metric) {
            Ok(polished) => {
                if certify_geodesic(&polished, metric, opts.tol_residual).pass {
                    return finish(polished, trace, slides, accepted, rejected, true);
                }
                if !out.accepted {
                    match energy(&polished, metric) {
                        Ok(ep) if ep < e => {
                            path = polished;
                            e = ep;
                            last_step = opts.step0;
                        }
                        _ => return finish(path, trace, slides, accepted, rejected, false),
                    }
                }
            }
            // Every segment has zero length: a constant path is trivially
            // geodesic.
            Err(Error::DegeneratePath) => return finish(path, trace, slides, accepted, rejected, true),
            Err(_) if !out.accepted => return finish(path, trace, slides, accepted, rejected, false),
            Err(_) => {}
        }
    }
    // Out of budget: hand back the resampled iterate when it is no worse.
    if let Ok(polished) = reparam_constant_speed(&path, metric) {
        if energy(&polished, metric).is_ok_and(|ep| ep <= e) {
            path = polished;
        }
    }
    let converged = certify_geodesic(&path, metric, opts.tol_residual).pass;
    finish(path, trace, slides, accepted, rejected, converged)
}

/// On the cone, replaces the stretch between nodes `i < j` by the broken
/// geodesic through the vertex when their developed angle is at least `pi`,
/// resampled at constant speed. Gradient steps only creep toward the vertex
/// and cannot carry nodes across it. Takes the window with the largest
/// energy decrease, if any.
fn cone_capture<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>, e: T) -> Option<(DiscretePath<T>, T)> {
    let Metric::Cone { alpha } = metric else {
        return None;
    };
    let n = path.n();
    let nodes = path.nodes();
    let q = segment_sq(path, metric).ok()?;
    let mut prefix = vec![T::zero(); n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + q[k];
    }
    let nf: T = from_usize(n);
    let mut best: Option<(usize, usize, T)> = None;
    for i in 0..n.saturating_sub(1) {
        if metric.vertex_at(&nodes[i]).is_some() {
            continue;
        }
        for j in i + 2..=n {
            if (*alpha * (nodes[j][1] - nodes[i][1])).abs() < T::PI() {
                continue;
            }
            if metric.vertex_at(&nodes[j]).is_none() {
                let d = nodes[i][0] + nodes[j][0];
                let gain = nf * (prefix[j] - prefix[i] - d * d / from_usize::<T>(j - i));
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((i, j, gain));
                }
            }
            break;
        }
    }
    let (i, j, gain) = best?;
    if !(gain > e * lit(1e-12)) {
        return None;
    }
    let (a, b) = (&nodes[i], &nodes[j]);
    let d = a[0] + b[0];
    let mut out = nodes.to_vec();
    for (k, node) in out.iter_mut().enumerate().take(j).skip(i + 1) {
        let s = d * from_usize::<T>(k - i) / from_usize::<T>(j - i);
        *node = if s <= a[0] { vec![a[0] - s, a[1]] } else { vec![s - a[0], b[1]] };
    }
    let captured = path.with_interior(out);
    let e1 = energy(&captured, metric).ok()?;
    (e1 < e).then_some((captured, e1))
}

/// Slides every break, left to right, keeping only slides that lower the
/// energy.
fn slide_all<T: Real>(path: &mut DiscretePath<T>, e: &mut T, metric: &Metric<T>, iter: usize, log: &mut Vec<SlideEvent<T>>) {
    let mut k = 0;
    loop {
        let bs = break_structure(path, metric);
        if k >= bs.breaks.len() {
            return;
        }
        let tau = bs.breaks[k].param;
        let Ok(cand) = vertex_slide(path, metric, &bs, k, T::one()) else {
            k += 1;
            continue;
        };
        let after = break_structure(&cand, metric);
        let e1 = energy(&cand, metric);
        if let (Ok(e1), true) = (e1, after.breaks.len() == bs.breaks.len()) {
            if e1 < *e {
                let l1: T = bs.legs[..=k].iter().copied().sum();
                let l2: T = bs.legs[k + 1..].iter().copied().sum();
                let tau_after = after.breaks[k].param;
                let (lo, hi) = tau_bounds(l1, l2, *e).unwrap_or((T::nan(), T::nan()));
                // The pre-slide path sits on the level b itself, so its break
                // may touch the bounds; the post-slide energy is strictly
                // lower and its break strictly inside.
                let eps = crate::scalar::lit::<T>(1e-9);
                let touches = |t: T| t >= lo - eps && t <= hi + eps;
                let inside = |t: T| t > lo && t < hi;
                let n = path.n();
                let (u0, u1) = (
                    if k == 0 { T::zero() } else { bs.breaks[k - 1].span(n).1 },
                    bs.breaks.get(k + 1).map_or(T::one(), |b| b.span(n).0),
                );
                let sigma = if l1 + l2 > T::zero() { u0 + (u1 - u0) * bs.legs[k] / (bs.legs[k] + bs.legs[k + 1]) } else { tau };
                log.push(SlideEvent {
                    iteration: iter,
                    break_index: k,
                    tau_before: tau,
                    tau_after,
                    sigma,
                    energy_before: *e,
                    energy_after: e1,
                    lo,
                    hi,
                    within_bounds: touches(tau) && inside(tau_after),
                });
                *path = cand;
                *e = e1;
            }
        }
        k += 1;
    }
}
