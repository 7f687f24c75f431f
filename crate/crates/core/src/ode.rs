//! Adaptive Dormand–Prince 8(5,3) stepping for small fixed-size systems.
//!
//! The stepper is deliberately low level: callers advance it to chosen times
//! (so outputs land exactly on a grid without interpolation) or step it one
//! accepted step at a time to watch for events.

use crate::{Error, Result};

const C: [f64; 12] = [
    0.0,
    0.526001519587677318785587544488e-01,
    0.789002279381515978178381316732e-01,
    0.118350341907227396726757197510e+00,
    0.281649658092772603273242802490e+00,
    0.333333333333333333333333333333e+00,
    0.25e+00,
    0.307692307692307692307692307692e+00,
    0.651282051282051282051282051282e+00,
    0.6e+00,
    0.857142857142857142857142857142e+00,
    1.0,
];

const A: [&[f64]; 11] = [
    &[5.26001519587677318785587544488e-2],
    &[1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2],
    &[2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2],
    &[
        2.41365134159266685502369798665e-1,
        0.0,
        -8.84549479328286085344864962717e-1,
        9.24834003261792003115737966543e-1,
    ],
    &[
        3.7037037037037037037037037037e-2,
        0.0,
        0.0,
        1.70828608729473871279604482173e-1,
        1.25467687566822425016691814123e-1,
    ],
    &[
        3.7109375e-2,
        0.0,
        0.0,
        1.70252211019544039314978060272e-1,
        6.02165389804559606850219397283e-2,
        -1.7578125e-2,
    ],
    &[
        3.70920001185047927108779319836e-2,
        0.0,
        0.0,
        1.70383925712239993810214054705e-1,
        1.07262030446373284651809199168e-1,
        -1.53194377486244017527936158236e-2,
        8.27378916381402288758473766002e-3,
    ],
    &[
        6.24110958716075717114429577812e-1,
        0.0,
        0.0,
        -3.36089262944694129406857109825e0,
        -8.68219346841726006818189891453e-1,
        2.75920996994467083049415600797e1,
        2.01540675504778934086186788979e1,
        -4.34898841810699588477366255144e1,
    ],
    &[
        4.77662536438264365890433908527e-1,
        0.0,
        0.0,
        -2.48811461997166764192642586468e0,
        -5.90290826836842996371446475743e-1,
        2.12300514481811942347288949897e1,
        1.52792336328824235832596922938e1,
        -3.32882109689848629194453265587e1,
        -2.03312017085086261358222928593e-2,
    ],
    &[
        -9.3714243008598732571704021658e-1,
        0.0,
        0.0,
        5.18637242884406370830023853209e0,
        1.09143734899672957818500254654e0,
        -8.14978701074692612513997267357e0,
        -1.85200656599969598641566180701e1,
        2.27394870993505042818970056734e1,
        2.49360555267965238987089396762e0,
        -3.0467644718982195003823669022e0,
    ],
    &[
        2.27331014751653820792359768449e0,
        0.0,
        0.0,
        -1.05344954667372501984066689879e1,
        -2.00087205822486249909675718444e0,
        -1.79589318631187989172765950534e1,
        2.79488845294199600508499808837e1,
        -2.85899827713502369474065508674e0,
        -8.87285693353062954433549289258e0,
        1.23605671757943030647266201528e1,
        6.43392746015763530355970484046e-1,
    ],
];

const B: [f64; 12] = [
    5.42937341165687622380535766363e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566e0,
    1.89151789931450038304281599044e0,
    -5.8012039600105847814672114227e0,
    3.1116436695781989440891606237e-1,
    -1.52160949662516078556178806805e-1,
    2.01365400804030348374776537501e-1,
    4.47106157277725905176885569043e-2,
];

// error weights of the fifth-order and third-order embedded estimates
const E5: [f64; 12] = [
    0.1312004499419488073250102996e-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753e+01,
    -0.4957589496572501915214079952e+00,
    0.1664377182454986536961530415e+01,
    -0.3503288487499736816886487290e+00,
    0.3341791187130174790297318841e+00,
    0.8192320648511571246570742613e-01,
    -0.2235530786388629525884427845e-01,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512e+00,
    0.733846688281611857341361741547e+00,
    0.220588235294117647058823529412e-01,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn both(tol: f64) -> Self {
        Self { rtol: tol, atol: tol }
    }
}

/// Solver state: current time, state vector and step-size memory.
#[derive(Debug, Clone)]
pub struct Dop853<const D: usize> {
    t: f64,
    y: [f64; D],
    h: f64,
    tol: Tolerance,
    h_max: f64,
    rejected: bool,
    accepted: usize,
    rejections: usize,
    max_steps: usize,
    last_h: f64,
}

impl<const D: usize> Dop853<D> {
    pub fn new(t0: f64, y0: [f64; D], tol: Tolerance) -> Self {
        Self {
            t: t0,
            y: y0,
            h: 0.0,
            tol,
            h_max: f64::INFINITY,
            rejected: false,
            accepted: 0,
            rejections: 0,
            max_steps: 50_000_000,
            last_h: 0.0,
        }
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; D] {
        &self.y
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejections
    }

    /// Size of the most recent accepted step.
    pub fn last_step(&self) -> f64 {
        self.last_h
    }

    fn scale(&self, y: f64, y_new: f64) -> f64 {
        self.tol.atol + self.tol.rtol * y.abs().max(y_new.abs())
    }

    fn initial_step<F>(&self, f: &mut F, dir: f64) -> f64
    where
        F: FnMut(f64, &[f64; D]) -> [f64; D],
    {
        let f0 = f(self.t, &self.y);
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..D {
            let sc = self.tol.atol + self.tol.rtol * self.y[i].abs();
            d0 += (self.y[i] / sc).powi(2);
            d1 += (f0[i] / sc).powi(2);
        }
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6
        } else {
            0.01 * (d0 / d1).sqrt()
        };
        h0 = h0.min(self.h_max);
        let mut y1 = self.y;
        for i in 0..D {
            y1[i] += dir * h0 * f0[i];
        }
        let f1 = f(self.t + dir * h0, &y1);
        let mut d2 = 0.0;
        for i in 0..D {
            let sc = self.tol.atol + self.tol.rtol * self.y[i].abs();
            d2 += ((f1[i] - f0[i]) / sc).powi(2);
        }
        let d2 = d2.sqrt() / h0;
        let h1 = if d1.sqrt().max(d2) <= 1e-15 {
            (1e-6f64).max(h0 * 1e-3)
        } else {
            (0.01 / d1.sqrt().max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(self.h_max)
    }

    /// Takes one accepted step towards `t_limit`, never stepping past it.
    pub fn step<F>(&mut self, f: &mut F, t_limit: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64; D]) -> [f64; D],
    {
        let span = t_limit - self.t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        if self.h == 0.0 {
            self.h = self.initial_step(f, dir);
        }
        loop {
            if self.accepted + self.rejections >= self.max_steps {
                return Err(Error::Integration {
                    t: self.t,
                    reason: format!("step budget of {} exhausted", self.max_steps),
                });
            }
            let mut h = self.h.abs().min(self.h_max);
            let mut last = false;
            if h * 1.01 >= span.abs() {
                h = span.abs();
                last = true;
            }
            if 0.1 * h <= f64::EPSILON * self.t.abs() {
                return Err(Error::Integration {
                    t: self.t,
                    reason: "step size underflow".into(),
                });
            }
            let h = dir * h;

            let mut k = [[0.0; D]; 12];
            k[0] = f(self.t, &self.y);
            for s in 1..12 {
                let mut ys = self.y;
                for (j, a) in A[s - 1].iter().enumerate() {
                    if *a != 0.0 {
                        for i in 0..D {
                            ys[i] += h * a * k[j][i];
                        }
                    }
                }
                k[s] = f(self.t + C[s] * h, &ys);
            }
            let mut y_new = self.y;
            let mut err5 = 0.0;
            let mut err3 = 0.0;
            for i in 0..D {
                let mut b = 0.0;
                let mut e = 0.0;
                for s in 0..12 {
                    b += B[s] * k[s][i];
                    e += E5[s] * k[s][i];
                }
                y_new[i] += h * b;
                let sc = self.scale(self.y[i], y_new[i]);
                let bhh = b - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
                err5 += (e / sc).powi(2);
                err3 += (bhh / sc).powi(2);
            }
            let mut deno = err5 + 0.01 * err3;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h.abs() * err5 * (1.0 / (deno * D as f64)).sqrt();

            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.rejections += 1;
                self.rejected = true;
                self.h = h / 10.0;
                continue;
            }

            let fac11 = err.powf(0.125);
            let fac = (1.0 / 6.0f64).max((1.0 / 0.333f64).min(fac11 / 0.9));
            if err <= 1.0 {
                let mut h_new = (h / fac).abs().min(self.h_max);
                if self.rejected {
                    h_new = h_new.min(h.abs());
                }
                self.rejected = false;
                self.accepted += 1;
                self.last_h = h;
                self.t = if last { t_limit } else { self.t + h };
                self.y = y_new;
                // a step shortened only to hit t_limit keeps the previous size
                if !last || h_new > self.h.abs() {
                    self.h = dir * h_new;
                }
                return Ok(());
            }
            self.rejections += 1;
            self.rejected = true;
            self.h = h / (1.0 / 0.333f64).min(fac11 / 0.9);
        }
    }

    /// Advances exactly to `t_target`.
    pub fn advance_to<F>(&mut self, f: &mut F, t_target: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64; D]) -> [f64; D],
    {
        while self.t != t_target {
            self.step(f, t_target)?;
        }
        Ok(())
    }
}
