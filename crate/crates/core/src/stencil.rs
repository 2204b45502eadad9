//! Central finite-difference stencils on a periodic grid.

use crate::error::{QflowError, Result};

/// Accuracy order of the central stencils used for `grad S`, `grad R` and
/// `laplacian R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct DifferenceOrder(u8);

impl DifferenceOrder {
    pub const SECOND: DifferenceOrder = DifferenceOrder(2);
    pub const EIGHTH: DifferenceOrder = DifferenceOrder(8);

    pub fn new(order: u8) -> Result<Self> {
        match order {
            2 | 4 | 6 | 8 | 10 | 12 => Ok(Self(order)),
            _ => Err(QflowError::InvalidParameter {
                name: "fields.fd_order",
                reason: format!("{order} is not one of 2, 4, 6, 8, 10, 12"),
            }),
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Points on each side of the centre.
    pub fn half_width(self) -> usize {
        (self.0 / 2) as usize
    }

    /// Antisymmetric weights `c_j`, `f'(x) ~ sum_j c_j (f_{i+j} - f_{i-j}) / dx`.
    pub fn first(self) -> &'static [f64] {
        match self.0 {
            2 => &[1.0 / 2.0],
            4 => &[2.0 / 3.0, -1.0 / 12.0],
            6 => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
            8 => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
            10 => &[5.0 / 6.0, -5.0 / 21.0, 5.0 / 84.0, -5.0 / 504.0, 1.0 / 1260.0],
            _ => &[6.0 / 7.0, -15.0 / 56.0, 5.0 / 63.0, -1.0 / 56.0, 1.0 / 385.0, -1.0 / 5544.0],
        }
    }

    /// Centre weight and symmetric weights for the second derivative,
    /// `f''(x) ~ (c_0 f_i + sum_j c_j (f_{i+j} + f_{i-j})) / dx^2`.
    pub fn second(self) -> (f64, &'static [f64]) {
        match self.0 {
            2 => (-2.0, &[1.0]),
            4 => (-5.0 / 2.0, &[4.0 / 3.0, -1.0 / 12.0]),
            6 => (-49.0 / 18.0, &[3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
            8 => (-205.0 / 72.0, &[8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0]),
            10 => (-5269.0 / 1800.0, &[5.0 / 3.0, -5.0 / 21.0, 5.0 / 126.0, -5.0 / 1008.0, 1.0 / 3150.0]),
            _ => (
                -5369.0 / 1800.0,
                &[12.0 / 7.0, -15.0 / 56.0, 10.0 / 189.0, -1.0 / 112.0, 2.0 / 1925.0, -1.0 / 16632.0],
            ),
        }
    }
}

impl Default for DifferenceOrder {
    fn default() -> Self {
        Self::EIGHTH
    }
}

/// First derivative of `f` at index `i`, where `value(j)` returns `f` at any
/// (possibly out-of-range) integer index.
pub fn first_at(order: DifferenceOrder, dx: f64, i: i64, value: impl Fn(i64) -> f64) -> f64 {
    order.first().iter().enumerate().map(|(j, c)| {
        let j = j as i64 + 1;
        c * (value(i + j) - value(i - j))
    }).sum::<f64>()
        / dx
}

/// Second derivative counterpart of [`first_at`].
pub fn second_at(order: DifferenceOrder, dx: f64, i: i64, value: impl Fn(i64) -> f64) -> f64 {
    let (c0, cs) = order.second();
    let mut acc = c0 * value(i);
    for (j, c) in cs.iter().enumerate() {
        let j = j as i64 + 1;
        acc += c * (value(i + j) + value(i - j));
    }
    acc / (dx * dx)
}
