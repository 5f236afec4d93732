use crate::error::Result;
use faer::Mat;
use hsa_harmonic::{Coord, HarmonicLimits, HssModel, LiftedLabel, LtpModel, PeriodicMatrix, Provenance, Signal, C64};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Frame change of a signal list: every ABC triplet becomes a DQZ triplet.
struct Frame {
    signals: Vec<Signal>,
    /// First index of each ABC triplet.
    triplets: Vec<usize>,
}

impl Frame {
    fn new(sigs: &[Signal]) -> Self {
        let mut signals = sigs.to_vec();
        let mut triplets = Vec::new();
        let mut i = 0;
        while i < sigs.len() {
            let is_triplet = i + 2 < sigs.len()
                && sigs[i].coord == Coord::A
                && sigs[i + 1].coord == Coord::B
                && sigs[i + 2].coord == Coord::C
                && sigs[i].group == sigs[i + 1].group
                && sigs[i].group == sigs[i + 2].group;
            if is_triplet {
                triplets.push(i);
                for (k, c) in [Coord::D, Coord::Q, Coord::Z].into_iter().enumerate() {
                    signals[i + k].coord = c;
                }
                i += 3;
            } else {
                i += 1;
            }
        }
        Self { signals, triplets }
    }

    fn block(&self, m3: &Mat<f64>, identity: f64) -> Mat<f64> {
        let n = self.signals.len();
        let mut t = Mat::from_fn(n, n, |i, j| if i == j { identity } else { 0.0 });
        for &s in &self.triplets {
            for i in 0..3 {
                for j in 0..3 {
                    t[(s + i, s + j)] = m3[(i, j)];
                }
            }
        }
        t
    }
}

fn derivative(p: &PeriodicMatrix) -> PeriodicMatrix {
    let terms: BTreeMap<i32, Mat<C64>> = p
        .terms()
        .iter()
        .map(|(&k, m)| (k, Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * C64::new(0.0, k as f64))))
        .collect();
    PeriodicMatrix::from_terms(p.nrows(), p.ncols(), terms).expect("same shape")
}

fn real(m: &Mat<C64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

/// LTI counterpart: the whole model expressed in the rotating frame (ABC
/// triplets through the Park transform, DQ and DC signals unchanged),
/// averaged over one period. For models whose only time dependence comes
/// from the frame transforms the average is exact.
///
/// Returns the model and the largest deviation of the transformed `A(θ)`
/// from its average.
pub fn lti_counterpart(ltp: &LtpModel, f1: f64) -> Result<(HssModel, f64)> {
    let (fx, fu, fy) = (Frame::new(ltp.states()), Frame::new(ltp.inputs()), Frame::new(ltp.outputs()));
    let (p, pinv, dp) = (PeriodicMatrix::park_dqz(), PeriodicMatrix::inv_park_dqz(), derivative(&PeriodicMatrix::park_dqz()));
    let w = 2.0 * PI * f1;
    let n_samples = 64;
    let (nx, nu, ny) = (fx.signals.len(), fu.signals.len(), fy.signals.len());
    let mut acc = [Mat::<f64>::zeros(nx, nx), Mat::zeros(nx, nu), Mat::zeros(ny, nx), Mat::zeros(ny, nu)];
    let mut samples = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let th = 2.0 * PI * k as f64 / n_samples as f64;
        let r = ltp.eval(th)?;
        let (t3, ti3, dt3) = (p.eval_real(th), pinv.eval_real(th), dp.eval_real(th));
        let tx = fx.block(&t3, 1.0);
        let txi = fx.block(&ti3, 1.0);
        let dtx = fx.block(&dt3, 0.0);
        let tui = fu.block(&ti3, 1.0);
        let ty = fy.block(&t3, 1.0);
        let a = &tx * &real(&r.a) * &txi + (&dtx * &txi) * w;
        let b = &tx * &real(&r.b) * &tui;
        let c = &ty * &real(&r.c) * &txi;
        let d = &ty * &real(&r.d) * &tui;
        for (s, m) in acc.iter_mut().zip([&a, &b, &c, &d]) {
            *s += m;
        }
        samples.push(a);
    }
    let scale = 1.0 / n_samples as f64;
    let avg: Vec<Mat<f64>> = acc.iter().map(|m| m * faer::Scale(scale)).collect();
    let variation = samples.iter().map(|a| (a - &avg[0]).norm_max()).fold(0.0, f64::max);
    let cplx = |m: &Mat<f64>| Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0));
    let label = |s: &[Signal]| s.iter().map(|s| LiftedLabel { signal: s.clone(), order: 0 }).collect();
    Ok((
        HssModel {
            a_tilde: cplx(&avg[0]),
            b_hat: cplx(&avg[1]),
            c_hat: cplx(&avg[2]),
            d_hat: cplx(&avg[3]),
            limits: HarmonicLimits::averaged(f1),
            states: label(&fx.signals),
            inputs: label(&fu.signals),
            outputs: label(&fy.signals),
            provenance: Provenance::LtiCounterpart,
        },
        variation,
    ))
}
