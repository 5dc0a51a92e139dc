use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClinicalMethod {
    Hw,
    Ar,
    Arima,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WebMethod {
    /// Weighted majority over the bagged members.
    Wm,
    /// Bagged LASSO.
    B,
    /// LASSO on the full panel.
    L,
    /// OLS on the full panel.
    O,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Combiner {
    Ols,
    SvrLinear,
    SvrGaussian,
}

/// A report column. Ordering follows the published table layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Naive,
    Clinical(ClinicalMethod),
    Web(WebMethod),
    Stack {
        combiner: Combiner,
        clinical: ClinicalMethod,
        web: WebMethod,
    },
}

/// Which table a method belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    SingleSource,
    Ensemble(Combiner),
}

impl ClinicalMethod {
    pub const ALL: [ClinicalMethod; 3] = [
        ClinicalMethod::Hw,
        ClinicalMethod::Ar,
        ClinicalMethod::Arima,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClinicalMethod::Hw => "HW",
            ClinicalMethod::Ar => "AR12",
            ClinicalMethod::Arima => "ARIMA",
        }
    }
}

impl WebMethod {
    pub const ALL: [WebMethod; 4] = [WebMethod::Wm, WebMethod::B, WebMethod::L, WebMethod::O];

    pub fn label(self) -> &'static str {
        match self {
            WebMethod::Wm => "WM",
            WebMethod::B => "B",
            WebMethod::L => "L",
            WebMethod::O => "O",
        }
    }
}

impl Combiner {
    pub const ALL: [Combiner; 3] = [Combiner::Ols, Combiner::SvrLinear, Combiner::SvrGaussian];

    pub fn label(self) -> &'static str {
        match self {
            Combiner::Ols => "OLS",
            Combiner::SvrLinear => "SVR-linear",
            Combiner::SvrGaussian => "SVR-gaussian",
        }
    }
}

impl Method {
    /// Naive plus the seven single-source methods.
    pub fn level0() -> Vec<Method> {
        let mut out = vec![Method::Naive];
        out.extend(ClinicalMethod::ALL.map(Method::Clinical));
        out.extend(WebMethod::ALL.map(Method::Web));
        out
    }

    /// The 36 ensemble columns, grouped by combiner.
    pub fn level1() -> Vec<Method> {
        let mut out = Vec::with_capacity(36);
        for combiner in Combiner::ALL {
            for clinical in ClinicalMethod::ALL {
                for web in WebMethod::ALL {
                    out.push(Method::Stack {
                        combiner,
                        clinical,
                        web,
                    });
                }
            }
        }
        out
    }

    pub fn all() -> Vec<Method> {
        let mut out = Self::level0();
        out.extend(Self::level1());
        out
    }

    pub fn is_level0(self) -> bool {
        !matches!(self, Method::Stack { .. })
    }

    pub fn block(self) -> Block {
        match self {
            Method::Stack { combiner, .. } => Block::Ensemble(combiner),
            _ => Block::SingleSource,
        }
    }

    /// Column header inside its block, e.g. `HW+WM`.
    pub fn short_label(self) -> String {
        match self {
            Method::Naive => "Naive".into(),
            Method::Clinical(c) => c.label().into(),
            Method::Web(w) => w.label().into(),
            Method::Stack { clinical, web, .. } => format!("{}+{}", clinical.label(), web.label()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Stack { combiner, .. } => {
                write!(f, "{}/{}", combiner.label(), self.short_label())
            }
            _ => f.write_str(&self.short_label()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::all()
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown method {s:?}")))
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::SingleSource => f.write_str("Single source"),
            Block::Ensemble(c) => f.write_str(c.label()),
        }
    }
}
