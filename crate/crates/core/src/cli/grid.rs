//! Evaluation grids for the `eval` subcommand.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::cplx;

/// A sampling grid on the real axis, the imaginary axis, or a complex
/// rectangle.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `real:START:STOP:COUNT`: COUNT points on [START, STOP] ⊂ ℝ.
    Real { start: f64, stop: f64, count: usize },
    /// `imag:START:STOP:COUNT`: COUNT points on i·[START, STOP].
    Imag { start: f64, stop: f64, count: usize },
    /// `rect:RE0:RE1:NRE:IM0:IM1:NIM`: an NRE×NIM tensor grid.
    Rect {
        re_start: f64,
        re_stop: f64,
        re_count: usize,
        im_start: f64,
        im_stop: f64,
        im_count: usize,
    },
}

fn axis(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("grid count must be at least 1".into()));
    }
    if !(start.is_finite() && stop.is_finite()) || start > stop {
        return Err(Error::InvalidArgument(format!(
            "grid range [{start}, {stop}] must be finite with start <= stop"
        )));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|j| start + step * j as f64).collect())
}

impl GridSpec {
    /// Parse the `--grid` argument.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = |why: &str| Error::InvalidArgument(format!("grid {text:?}: {why}"));
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| bad(&format!("{s:?} is not a number")))
        };
        let cnt = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| bad(&format!("{s:?} is not a count")))
        };
        match parts.as_slice() {
            ["real", a, b, n] => Ok(GridSpec::Real {
                start: num(a)?,
                stop: num(b)?,
                count: cnt(n)?,
            }),
            ["imag", a, b, n] => Ok(GridSpec::Imag {
                start: num(a)?,
                stop: num(b)?,
                count: cnt(n)?,
            }),
            ["rect", a, b, n, c, d, m] => Ok(GridSpec::Rect {
                re_start: num(a)?,
                re_stop: num(b)?,
                re_count: cnt(n)?,
                im_start: num(c)?,
                im_stop: num(d)?,
                im_count: cnt(m)?,
            }),
            _ => Err(bad(
                "expected real:START:STOP:COUNT, imag:START:STOP:COUNT or rect:RE0:RE1:NRE:IM0:IM1:NIM",
            )),
        }
    }

    /// Materialize the grid points in deterministic order (real-major for
    /// rectangles).
    pub fn points(&self) -> Result<Vec<Complex64>> {
        match self {
            GridSpec::Real { start, stop, count } => {
                Ok(axis(*start, *stop, *count)?.into_iter().map(|x| cplx(x, 0.0)).collect())
            }
            GridSpec::Imag { start, stop, count } => {
                Ok(axis(*start, *stop, *count)?.into_iter().map(|y| cplx(0.0, y)).collect())
            }
            GridSpec::Rect {
                re_start,
                re_stop,
                re_count,
                im_start,
                im_stop,
                im_count,
            } => {
                let res = axis(*re_start, *re_stop, *re_count)?;
                let ims = axis(*im_start, *im_stop, *im_count)?;
                let mut pts = Vec::with_capacity(res.len() * ims.len());
                for &x in &res {
                    for &y in &ims {
                        pts.push(cplx(x, y));
                    }
                }
                Ok(pts)
            }
        }
    }
}
