use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A stack of equally long 1D feature maps, stored channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMap {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

impl ChannelMap {
    /// Builds a map from channel-major data, rejecting empty shapes and
    /// non-finite values.
    pub fn new(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::Input(format!(
                "channel map needs positive shape, got {channels}x{length}"
            )));
        }
        if data.len() != channels * length {
            return Err(Error::dim("ChannelMap::new", channels * length, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value at flat index {i}")));
        }
        Ok(Self {
            channels,
            length,
            data,
        })
    }

    /// Single-channel map, the shape of a spectrum entering the network.
    pub fn from_signal(signal: Vec<f64>) -> Result<Self> {
        let n = signal.len();
        Self::new(1, n, signal)
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            data: vec![0.0; channels * length],
        }
    }

    pub(crate) fn from_raw(channels: usize, length: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), channels * length);
        Self {
            channels,
            length,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, k: usize) -> &[f64] {
        &self.data[k * self.length..(k + 1) * self.length]
    }

    pub fn channel_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.length..(k + 1) * self.length]
    }

    #[inline]
    pub fn get(&self, k: usize, x: usize) -> f64 {
        self.data[k * self.length + x]
    }

    /// Flattens position-major: `flat[x * channels + k] = self[k][x]`.
    ///
    /// This is the order in which the first dense layer indexes its input
    /// rows, so row `x * channels + k` of its weight matrix belongs to
    /// position `x` of channel `k`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = vec![0.0; self.data.len()];
        self.flatten_into(&mut flat);
        flat
    }

    pub(crate) fn flatten_into(&self, flat: &mut [f64]) {
        let c = self.channels;
        for k in 0..c {
            for (x, &v) in self.channel(k).iter().enumerate() {
                flat[x * c + k] = v;
            }
        }
    }

    /// Inverse of [`ChannelMap::flatten`].
    pub fn unflatten(flat: &[f64], channels: usize, length: usize) -> Result<Self> {
        if flat.len() != channels * length {
            return Err(Error::dim("ChannelMap::unflatten", channels * length, flat.len()));
        }
        let mut data = vec![0.0; flat.len()];
        for x in 0..length {
            for k in 0..channels {
                data[k * length + x] = flat[x * channels + k];
            }
        }
        Ok(Self::from_raw(channels, length, data))
    }
}
