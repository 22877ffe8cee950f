//! Counter-based randomness: every draw is a pure function of its key.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
#[inline]
fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    avalanche(state.wrapping_add(GOLDEN_GAMMA) ^ word)
}

/// Maps 53 random bits onto `[0, 1)`.
#[inline]
fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Prefix of the key `(seed, sample)`; finishes with the site coordinates.
#[derive(Debug, Clone, Copy)]
pub struct SiteMixer {
    state: u64,
}

impl SiteMixer {
    pub fn new(seed: u64, sample: u64) -> Self {
        Self { state: absorb(absorb(avalanche(seed), sample), 0x5173) }
    }

    /// Raw 64-bit draw for a site, keyed additionally by a stream number.
    pub fn bits(&self, site: &[i64], stream: u64) -> u64 {
        let mut h = absorb(self.state, site.len() as u64);
        for &c in site {
            h = absorb(h, c as u64);
        }
        absorb(h, stream)
    }

    pub fn uniform(&self, site: &[i64]) -> f64 {
        unit(self.bits(site, 0))
    }
}

/// Uniform variate in `[0, 1)` for `(seed, sample, site)`.
pub fn site_uniform(seed: u64, sample: u64, site: &[i64]) -> f64 {
    SiteMixer::new(seed, sample).uniform(site)
}

/// Deterministic stream of uniforms keyed by `(seed, tag)`, used for solver
/// start vectors and test fixtures.
pub(crate) fn keyed_uniforms(seed: u64, tag: u64, len: usize) -> impl Iterator<Item = f64> {
    let base = absorb(avalanche(seed), tag);
    (0..len as u64).map(move |i| unit(absorb(base, i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure_functions_of_key() {
        assert_eq!(site_uniform(1, 2, &[3, -4]), site_uniform(1, 2, &[3, -4]));
        assert_ne!(site_uniform(1, 2, &[3, -4]), site_uniform(1, 2, &[-4, 3]));
        assert_ne!(site_uniform(1, 2, &[0]), site_uniform(1, 2, &[0, 0]));
        assert_ne!(site_uniform(1, 2, &[0]), site_uniform(2, 1, &[0]));
    }

    #[test]
    fn unit_range() {
        assert_eq!(unit(0), 0.0);
        assert!(unit(u64::MAX) < 1.0);
        for u in keyed_uniforms(9, 0, 1000) {
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn bucket_frequencies_flat() {
        let mut buckets = [0usize; 10];
        let n = 100_000;
        let mixer = SiteMixer::new(11, 0);
        for i in 0..n {
            let u = mixer.uniform(&[i as i64]);
            buckets[(u * 10.0) as usize] += 1;
        }
        // chi-square with 9 dof; 27.9 is the 0.999 quantile
        let expected = n as f64 / 10.0;
        let chi2: f64 = buckets.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 27.9, "chi2 = {chi2}");
    }
}
