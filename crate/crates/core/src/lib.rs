//! A small 1D convolutional network for vibrational spectra, written from
//! scratch in `f64`, with two ways of asking which wavenumbers drove a
//! prediction: Grad-CAM and a map built from the first fully-connected
//! layer's weights.
//!
//! Modules, bottom up:
//!
//! - [`ndcore`]: layer kernels (convolution, leaky ReLU, max pooling, dense,
//!   dropout, softmax cross-entropy) with analytic backward passes.
//! - [`model`]: the architecture, parameter init, forward and backward.
//! - [`optim`]: Adam, mini-batch training, stratified k-fold evaluation.
//! - [`viz`]: Grad-CAM, FC-weight contribution maps, upsampling.
//! - [`specgen`]: synthetic Lorentzian datasets and mixtures.
//! - [`preprocess`]: baseline removal, spline resampling, normalization.
//!
//! ```
//! use raman_cnn::model::{init_model, predict, ArchConfig};
//! use raman_cnn::viz::{contribution_map, MapKind};
//!
//! let arch = ArchConfig::new(128, 3).with_filters(4, 5);
//! let params = init_model(&arch, 7)?;
//! let x: Vec<f64> = (0..128).map(|i| (i as f64 / 9.0).sin().abs()).collect();
//! let p = predict(&params, &x)?;
//! let map = contribution_map(&params, &x, p.class, MapKind::FcMap)?;
//! assert_eq!(map.values.len(), 128);
//! # Ok::<(), raman_cnn::Error>(())
//! ```

pub mod error;
pub mod ndcore;

pub mod model;
pub mod optim;
pub mod viz;

pub mod preprocess;
pub mod specgen;

pub use error::{Error, Result};
