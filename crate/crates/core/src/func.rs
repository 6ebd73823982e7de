use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

pub type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Matrix function whose entries are estimated or bounded.
#[derive(Clone)]
pub enum FunctionDescriptor {
    Exp,
    /// `r(z) = (1 - alpha z)^{-1}`.
    Resolvent {
        alpha: f64,
    },
    /// Arbitrary scalar function; the caller vouches for analyticity.
    Custom {
        name: String,
        eval: ComplexFn,
    },
}

impl FunctionDescriptor {
    pub fn resolvent(alpha: f64) -> Self {
        FunctionDescriptor::Resolvent { alpha }
    }

    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        FunctionDescriptor::Custom {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            FunctionDescriptor::Exp => z.exp(),
            FunctionDescriptor::Resolvent { alpha } => {
                (Complex64::new(1.0, 0.0) - *alpha * z).inv()
            }
            FunctionDescriptor::Custom { eval, .. } => eval(z),
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        match self {
            FunctionDescriptor::Exp => x.exp(),
            FunctionDescriptor::Resolvent { alpha } => 1.0 / (1.0 - alpha * x),
            FunctionDescriptor::Custom { eval, .. } => eval(Complex64::new(x, 0.0)).re,
        }
    }

    pub fn name(&self) -> String {
        match self {
            FunctionDescriptor::Exp => "exp".into(),
            FunctionDescriptor::Resolvent { alpha } => format!("resolvent:{alpha}"),
            FunctionDescriptor::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for FunctionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionDescriptor::Exp => write!(f, "Exp"),
            FunctionDescriptor::Resolvent { alpha } => {
                f.debug_struct("Resolvent").field("alpha", alpha).finish()
            }
            FunctionDescriptor::Custom { name, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .finish_non_exhaustive(),
        }
    }
}

impl PartialEq for FunctionDescriptor {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (FunctionDescriptor::Exp, FunctionDescriptor::Exp) => true,
            (
                FunctionDescriptor::Resolvent { alpha: a },
                FunctionDescriptor::Resolvent { alpha: b },
            ) => a == b,
            (
                FunctionDescriptor::Custom { eval: a, .. },
                FunctionDescriptor::Custom { eval: b, .. },
            ) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for FunctionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
