//! Elastic-net penalized regression for ordinal and multinomial responses in
//! the elementwise-link multinomial-ordinal class: cumulative, stopping
//! ratio, continuation ratio and adjacent category families with logit,
//! probit, complementary log-log or cauchit links, in parallel, nonparallel
//! or semi-parallel form.
//!
//! ```
//! use ndarray::array;
//! use ordnet::{fit, Dataset, Family, FamilyKind, FitConfig, Link, ModelForm, ModelSpec};
//!
//! let x = array![[0.2], [1.4], [-0.7], [0.9], [-1.1], [0.3]];
//! let data = Dataset::from_classes(x, &[0, 2, 0, 1, 0, 2], 3).unwrap();
//! let spec = ModelSpec {
//!     link: Link::Logit,
//!     family: Family::forward(FamilyKind::Cumulative),
//!     form: ModelForm::PARALLEL,
//! };
//! let f = fit(&FitConfig::new(spec), &data).unwrap();
//! assert_eq!(f.path.points[0].n_nonzero, 2);
//! ```

pub mod error;
pub mod fit;
pub mod links;
pub mod model;
pub mod optim;
pub mod sim;
pub mod tune;

pub use error::{Error, Result};
pub use fit::{fit, Fit, FitConfig, LambdaSelector, Prediction};
pub use links::{Family, FamilyKind, Link};
pub use model::{Coefficients, Dataset, Layout, ModelForm, ModelSpec};
pub use optim::{Controls, FitPath, LambdaSpec, PenaltyConfig};
