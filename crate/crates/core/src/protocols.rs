//! Annealing schedules `A(t)`, `B(t)`, `C(t)` for linear annealing, the
//! catalyst-assisted variant and sweep-quench-sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Coefficients {
    pub fn as_tuple(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }
}

/// Schedule families. Times are in units of `1/J`; `t` is the sweep time `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Protocol {
    Qa {
        t: f64,
    },
    Nsdqa {
        t: f64,
        jxx: f64,
    },
    Sqs {
        t: f64,
        t_q: f64,
        delta_t: f64,
        b_q: f64,
    },
}

/// Piece of a schedule on which the coefficients are smooth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub rule: SegmentRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentRule {
    /// `B = (t - offset) / T`, with `C = A B` when `catalyst` is set.
    Sweep { offset: f64, sweep: f64, catalyst: bool },
    /// `B` held fixed.
    Hold { b: f64 },
}

impl Segment {
    /// Coefficients from this segment's formula; `t` may sit on either end.
    pub fn coefficients(&self, t: f64) -> Coefficients {
        match self.rule {
            SegmentRule::Sweep {
                offset,
                sweep,
                catalyst,
            } => {
                let b = ((t - offset) / sweep).clamp(0.0, 1.0);
                let a = 1.0 - b;
                Coefficients {
                    a,
                    b,
                    c: if catalyst { a * b } else { 0.0 },
                }
            }
            SegmentRule::Hold { b } => Coefficients { a: 1.0 - b, b, c: 0.0 },
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive".into(),
        });
    }
    Ok(())
}

impl Protocol {
    pub fn qa(t: f64) -> Result<Self> {
        let p = Protocol::Qa { t };
        p.validate()?;
        Ok(p)
    }

    pub fn nsdqa(t: f64, jxx: f64) -> Result<Self> {
        let p = Protocol::Nsdqa { t, jxx };
        p.validate()?;
        Ok(p)
    }

    /// Sweep-quench-sweep with the quench starting at `t_q = tau_q T`.
    pub fn sqs(t: f64, tau_q: f64, delta_t: f64, b_q: f64) -> Result<Self> {
        let p = Protocol::Sqs {
            t,
            t_q: tau_q * t,
            delta_t,
            b_q,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("T", self.sweep_time())?;
        match *self {
            Protocol::Qa { .. } => Ok(()),
            Protocol::Nsdqa { jxx, .. } => {
                if !jxx.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "j_xx",
                        value: jxx,
                        reason: "must be finite".into(),
                    });
                }
                Ok(())
            }
            Protocol::Sqs {
                t,
                t_q,
                delta_t,
                b_q,
            } => {
                if !(0.0..=t).contains(&t_q) {
                    return Err(Error::InvalidParameter {
                        name: "t_q",
                        value: t_q,
                        reason: format!("must lie in [0, {t}]"),
                    });
                }
                if !(delta_t.is_finite() && delta_t >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "delta_t",
                        value: delta_t,
                        reason: "must be finite and non-negative".into(),
                    });
                }
                if !(0.0..=1.0).contains(&b_q) {
                    return Err(Error::InvalidParameter {
                        name: "b_q",
                        value: b_q,
                        reason: "must lie in [0, 1]".into(),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Qa { .. } => "qa",
            Protocol::Nsdqa { .. } => "nsdqa",
            Protocol::Sqs { .. } => "sqs",
        }
    }

    /// Sweep time `T`.
    pub fn sweep_time(&self) -> f64 {
        match *self {
            Protocol::Qa { t } | Protocol::Nsdqa { t, .. } | Protocol::Sqs { t, .. } => t,
        }
    }

    /// Total duration `T' = T + dT_q` (equal to `T` without a quench).
    pub fn total_time(&self) -> f64 {
        match *self {
            Protocol::Sqs { t, delta_t, .. } => t + delta_t,
            _ => self.sweep_time(),
        }
    }

    /// Catalyst coupling carried by the protocol, zero when it has none.
    pub fn jxx(&self) -> f64 {
        match *self {
            Protocol::Nsdqa { jxx, .. } => jxx,
            _ => 0.0,
        }
    }

    /// Smooth pieces of the schedule in time order; empty pieces are dropped.
    pub fn segments(&self) -> Vec<Segment> {
        match *self {
            Protocol::Qa { t } => vec![Segment {
                start: 0.0,
                end: t,
                rule: SegmentRule::Sweep {
                    offset: 0.0,
                    sweep: t,
                    catalyst: false,
                },
            }],
            Protocol::Nsdqa { t, .. } => vec![Segment {
                start: 0.0,
                end: t,
                rule: SegmentRule::Sweep {
                    offset: 0.0,
                    sweep: t,
                    catalyst: true,
                },
            }],
            Protocol::Sqs {
                t,
                t_q,
                delta_t,
                b_q,
            } => {
                let pieces = [
                    Segment {
                        start: 0.0,
                        end: t_q,
                        rule: SegmentRule::Sweep {
                            offset: 0.0,
                            sweep: t,
                            catalyst: false,
                        },
                    },
                    Segment {
                        start: t_q,
                        end: t_q + delta_t,
                        rule: SegmentRule::Hold { b: b_q },
                    },
                    Segment {
                        start: t_q + delta_t,
                        end: t + delta_t,
                        rule: SegmentRule::Sweep {
                            offset: delta_t,
                            sweep: t,
                            catalyst: false,
                        },
                    },
                ];
                pieces.into_iter().filter(|s| s.end > s.start).collect()
            }
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let total = self.total_time();
        if !(t >= 0.0 && t <= total) {
            return Err(Error::TimeOutOfRange { t, total });
        }
        Ok(())
    }

    /// `(A, B, C)` at time `t`. The quench window is half-open,
    /// `[t_q, t_q + dT_q)`.
    pub fn coefficients(&self, t: f64) -> Result<Coefficients> {
        self.check_time(t)?;
        let b = match *self {
            Protocol::Qa { t: sweep } | Protocol::Nsdqa { t: sweep, .. } => t / sweep,
            Protocol::Sqs {
                t: sweep,
                t_q,
                delta_t,
                b_q,
            } => {
                if t < t_q {
                    t / sweep
                } else if t < t_q + delta_t {
                    b_q
                } else {
                    (t - delta_t) / sweep
                }
            }
        };
        let b = b.clamp(0.0, 1.0);
        let a = 1.0 - b;
        let c = match self {
            Protocol::Nsdqa { .. } => a * b,
            _ => 0.0,
        };
        Ok(Coefficients { a, b, c })
    }

    /// Coefficients of the Hamiltonian whose eigenstates define fidelity at
    /// time `t`. Inside the quench window this is the pre-quench Hamiltonian
    /// at `B = t_q / T`.
    pub fn reference_coefficients(&self, t: f64) -> Result<Coefficients> {
        self.check_time(t)?;
        match *self {
            Protocol::Sqs {
                t: sweep,
                t_q,
                delta_t,
                ..
            } if t >= t_q && t < t_q + delta_t => {
                let b = (t_q / sweep).clamp(0.0, 1.0);
                Ok(Coefficients { a: 1.0 - b, b, c: 0.0 })
            }
            _ => self.coefficients(t),
        }
    }

    /// Anneal fraction `s = t / T'`.
    pub fn fraction(&self, t: f64) -> f64 {
        t / self.total_time()
    }
}

/// Landau-Zener style survival estimate `P0 exp(-T gap^2)`.
pub fn lz_estimate(p0: f64, t: f64, gap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidParameter {
            name: "P0",
            value: p0,
            reason: "must lie in [0, 1]".into(),
        });
    }
    positive("T", t)?;
    if !(gap >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "gap",
            value: gap,
            reason: "must be non-negative".into(),
        });
    }
    Ok(p0 * (-t * gap * gap).exp())
}
