//! Right-hand sides of the evolution `u_t = rhs(u)`.
//!
//! Four formulations are algebraically equivalent:
//!
//! * `Primitive`: `(1-∂x²)^{-1}(2∂x + ∂x²)[(2u - u_x)²]`
//! * `FormA`: `4uu_x + G⋆[∂x(2u_x² + 6u²) + ∂x²(u_x²)]`
//! * `FormB`: `4uu_x - u_x² + G⋆[∂x(2u_x² + 6u²) + u_x²]`
//! * `Momentum`: evolve `m = u - u_xx` by
//!   `m_t = 2m² + (8u_x - 4u)m + (4u - 2u_x)m_x + 2(u + u_x)²`
//!
//! `Sqrt3` is the rewriting
//! `4uu_x - u_x² + √3u² - G⋆[u_x² - √3u²] + G_x⋆[(√2u_x + √6u)²]`, kept verbatim.
//! It differs from the others by `-√3u² + 3√3 G⋆u² - 2G⋆u_x²` and is only
//! evaluated for diagnostics.
//!
//! All quadratic products are dealiased with the two-thirds rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dealiased_product, spectral_derivative, Field};
use crate::nonlocal::{helmholtz_forward, helmholtz_inverse, p2_apply};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RhsForm {
    Primitive,
    FormA,
    FormB,
    Momentum,
    Sqrt3,
}

impl RhsForm {
    pub const EQUIVALENT: [RhsForm; 4] = [
        RhsForm::Primitive,
        RhsForm::FormA,
        RhsForm::FormB,
        RhsForm::Momentum,
    ];

    pub fn is_diagnostic_only(self) -> bool {
        self == RhsForm::Sqrt3
    }

    pub fn name(self) -> &'static str {
        match self {
            RhsForm::Primitive => "Primitive",
            RhsForm::FormA => "FormA",
            RhsForm::FormB => "FormB",
            RhsForm::Momentum => "Momentum",
            RhsForm::Sqrt3 => "Sqrt3",
        }
    }
}

impl fmt::Display for RhsForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RhsForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "primitive" => Ok(RhsForm::Primitive),
            "forma" | "form_a" | "a" => Ok(RhsForm::FormA),
            "formb" | "form_b" | "b" => Ok(RhsForm::FormB),
            "momentum" => Ok(RhsForm::Momentum),
            "sqrt3" => Ok(RhsForm::Sqrt3),
            other => Err(Error::InvalidArgument(format!("unknown rhs form `{other}`"))),
        }
    }
}

/// Quadratic products with or without the two-thirds rule.
#[derive(Clone, Copy, Debug)]
struct Products {
    dealias: bool,
}

impl Products {
    fn mul(self, a: &Field, b: &Field) -> Result<Field> {
        if self.dealias {
            dealiased_product(a, b)
        } else {
            a.pointwise_mul(b)
        }
    }
}

fn checked(term: &str, f: Field) -> Result<Field> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFiniteTerm {
            term: term.to_string(),
        })
    }
}

fn dx(f: &Field) -> Field {
    spectral_derivative(f, 1)
}

fn dxx(f: &Field) -> Field {
    spectral_derivative(f, 2)
}

/// `du/dt` for the selected formulation, with dealiased products.
pub fn rhs(u: &Field, form: RhsForm) -> Result<Field> {
    rhs_with(u, form, true)
}

/// `du/dt` with dealiasing switched on or off.
pub fn rhs_with(u: &Field, form: RhsForm, dealias: bool) -> Result<Field> {
    if !u.is_finite() {
        return Err(Error::NonFiniteTerm { term: "u".into() });
    }
    let p = Products { dealias };
    let ux = checked("u_x", dx(u))?;
    match form {
        RhsForm::FormA => {
            let uux = checked("u*u_x", p.mul(u, &ux)?)?;
            let uu = checked("u^2", p.mul(u, u)?)?;
            let uxux = checked("u_x^2", p.mul(&ux, &ux)?)?;
            let inner = &dx(&(&(&uxux * 2.0) + &(&uu * 6.0))) + &dxx(&uxux);
            let nonlocal = checked("G*[...]", helmholtz_inverse(&inner))?;
            Ok(&(&uux * 4.0) + &nonlocal)
        }
        RhsForm::FormB => {
            let uux = checked("u*u_x", p.mul(u, &ux)?)?;
            let uu = checked("u^2", p.mul(u, u)?)?;
            let uxux = checked("u_x^2", p.mul(&ux, &ux)?)?;
            let transport = checked("G_x*[2u_x^2+6u^2]", p2_apply(&(&(&uxux * 2.0) + &(&uu * 6.0))))?;
            let smooth = checked("G*u_x^2", helmholtz_inverse(&uxux))?;
            Ok(&(&(&(&uux * 4.0) - &uxux) + &transport) + &smooth)
        }
        RhsForm::Primitive => {
            let w = &(u * 2.0) - &ux;
            let q = checked("(2u-u_x)^2", p.mul(&w, &w)?)?;
            let inner = &(&dx(&q) * 2.0) + &dxx(&q);
            checked("G*[(2dx+dxx)q]", helmholtz_inverse(&inner))
        }
        RhsForm::Momentum => {
            let m = momentum_from_velocity(u);
            let mt = momentum_tendency_parts(u, &ux, &m, p)?;
            checked("G*m_t", helmholtz_inverse(&mt))
        }
        RhsForm::Sqrt3 => {
            let s3 = 3f64.sqrt();
            let uux = checked("u*u_x", p.mul(u, &ux)?)?;
            let uu = checked("u^2", p.mul(u, u)?)?;
            let uxux = checked("u_x^2", p.mul(&ux, &ux)?)?;
            let w = &(&ux * 2f64.sqrt()) + &(u * 6f64.sqrt());
            let ww = checked("(sqrt2 u_x + sqrt6 u)^2", p.mul(&w, &w)?)?;
            let local = &(&(&uux * 4.0) - &uxux) + &(&uu * s3);
            let smooth = checked("G*[u_x^2 - sqrt3 u^2]", helmholtz_inverse(&(&uxux - &(&uu * s3))))?;
            let transport = checked("G_x*[...]^2", p2_apply(&ww))?;
            Ok(&(&local - &smooth) + &transport)
        }
    }
}

fn momentum_tendency_parts(u: &Field, ux: &Field, m: &Field, p: Products) -> Result<Field> {
    let mx = checked("m_x", dx(m))?;
    let mm = checked("m^2", p.mul(m, m)?)?;
    let a = &(ux * 8.0) - &(u * 4.0);
    let am = checked("(8u_x-4u)m", p.mul(&a, m)?)?;
    let b = &(u * 4.0) - &(ux * 2.0);
    let bmx = checked("(4u-2u_x)m_x", p.mul(&b, &mx)?)?;
    let s = u + ux;
    let ss = checked("(u+u_x)^2", p.mul(&s, &s)?)?;
    Ok(&(&(&(&mm * 2.0) + &am) + &bmx) + &(&ss * 2.0))
}

/// `dm/dt` for the momentum density, recovering `u = (1-∂x²)^{-1} m`.
pub fn momentum_tendency(m: &Field) -> Result<Field> {
    if !m.is_finite() {
        return Err(Error::NonFiniteTerm { term: "m".into() });
    }
    let u = velocity_from_momentum(m);
    let ux = dx(&u);
    momentum_tendency_parts(&u, &ux, m, Products { dealias: true })
}

/// `m = u - u_xx`.
pub fn momentum_from_velocity(u: &Field) -> Field {
    helmholtz_forward(u)
}

/// `u = (1 - ∂x²)^{-1} m`.
pub fn velocity_from_momentum(m: &Field) -> Field {
    helmholtz_inverse(m)
}

/// `‖rhs(u, f1) - rhs(u, f2)‖_∞`.
pub fn form_residual(u: &Field, f1: RhsForm, f2: RhsForm) -> Result<f64> {
    let a = rhs(u, f1)?;
    let b = rhs(u, f2)?;
    Ok((&a - &b).sup())
}
