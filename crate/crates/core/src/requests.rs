//! Service-chain user requests and the random workload generator.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{CoverageMap, GroundPoint};
use crate::units::Fixed;

pub type RequestId = u64;

/// One processing stage of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vnf {
    /// vCPUs.
    pub cpu_demand: Fixed,
    /// GB.
    pub mem_demand: Fixed,
    /// ms.
    pub compute_time: Fixed,
}

impl Vnf {
    pub fn access() -> Self {
        Vnf { cpu_demand: Fixed::ZERO, mem_demand: Fixed::ZERO, compute_time: Fixed::ZERO }
    }
}

/// A service chain `f_s -> f_2 -> ... -> f_d`. `vnfs[0]` and the last entry
/// are the zero-demand access functions; `chain_bandwidth[i]` is the demand
/// of the edge between `vnfs[i]` and `vnfs[i + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserRequest {
    pub id: RequestId,
    pub vnfs: Vec<Vnf>,
    /// Mbps per chain edge.
    pub chain_bandwidth: Vec<Fixed>,
    pub source: GroundPoint,
    pub destination: GroundPoint,
    /// ms.
    pub max_delay: Fixed,
    pub arrival_slot: u64,
    /// In slots, at least one.
    pub duration: u64,
}

impl UserRequest {
    pub fn chain_len(&self) -> usize {
        self.vnfs.len()
    }

    /// Indices of the VNFs that run on a server (all but the access functions).
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.vnfs.len().saturating_sub(1)
    }

    pub fn interior_count(&self) -> usize {
        self.vnfs.len().saturating_sub(2)
    }

    /// Sum of computing times; independent of placement.
    pub fn compute_delay(&self) -> Fixed {
        self.vnfs.iter().map(|v| v.compute_time).sum()
    }

    /// Bandwidth of the first chain edge (source access to first interior VNF).
    pub fn uplink_bandwidth(&self) -> Fixed {
        self.chain_bandwidth.first().copied().unwrap_or(Fixed::ZERO)
    }

    /// Bandwidth of the last chain edge (last interior VNF to destination access).
    pub fn downlink_bandwidth(&self) -> Fixed {
        self.chain_bandwidth.last().copied().unwrap_or(Fixed::ZERO)
    }

    /// Checks the chain shape invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.vnfs.len();
        if n < 2 {
            return Err(Error::invalid("request.vnfs", "a chain needs both access functions"));
        }
        if self.chain_bandwidth.len() != n - 1 {
            return Err(Error::invalid("request.chain_bandwidth", "one entry per consecutive VNF pair"));
        }
        for end in [&self.vnfs[0], &self.vnfs[n - 1]] {
            if *end != Vnf::access() {
                return Err(Error::invalid("request.vnfs", "access functions carry no demand"));
            }
        }
        if self.duration == 0 {
            return Err(Error::invalid("request.duration", "must be >= 1 slot"));
        }
        Ok(())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, integer: bool) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        if integer {
            let lo = self.lo.ceil() as i64;
            let hi = self.hi.floor() as i64;
            rng.gen_range(lo..=hi) as f64
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }

    fn check(&self, field: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::invalid(field, format!("need lo <= hi, got [{}, {}]", self.lo, self.hi)));
        }
        if self.lo < 0.0 {
            return Err(Error::invalid(field, "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadParams {
    pub chain_exponent: f64,
    /// Chain length bounds, counting both access functions.
    pub chain_min: usize,
    pub chain_max: usize,
    pub cpu: Range,
    pub mem: Range,
    pub compute_ms: Range,
    pub bandwidth_mbps: Range,
    /// Draw demands from the integers inside each range instead of the reals.
    pub integer_demands: bool,
    pub max_delay_ms: f64,
    /// Mean request lifetime in slots.
    pub mean_duration: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            chain_exponent: 2.0,
            chain_min: 2,
            chain_max: 7,
            cpu: Range::new(1.0, 2.0),
            mem: Range::new(2.0, 4.0),
            compute_ms: Range::new(20.0, 30.0),
            bandwidth_mbps: Range::new(1.0, 5.0),
            integer_demands: false,
            max_delay_ms: 250.0,
            mean_duration: 3.0,
        }
    }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<()> {
        if self.chain_min < 2 {
            return Err(Error::invalid("workload.chain_min", "must be >= 2"));
        }
        if self.chain_min > self.chain_max {
            return Err(Error::invalid("workload.chain_max", "must be >= chain_min"));
        }
        if !self.chain_exponent.is_finite() {
            return Err(Error::invalid("workload.chain_exponent", "must be finite"));
        }
        self.cpu.check("workload.cpu")?;
        self.mem.check("workload.mem")?;
        self.compute_ms.check("workload.compute_ms")?;
        self.bandwidth_mbps.check("workload.bandwidth_mbps")?;
        if self.integer_demands {
            for (field, r) in [("workload.cpu", &self.cpu), ("workload.mem", &self.mem)] {
                if r.lo.ceil() > r.hi.floor() {
                    return Err(Error::invalid(field, "contains no integer"));
                }
            }
        }
        if self.max_delay_ms.is_nan() || self.max_delay_ms <= 0.0 {
            return Err(Error::invalid("workload.max_delay_ms", "must be > 0"));
        }
        if self.mean_duration.is_nan() || self.mean_duration <= 0.0 {
            return Err(Error::invalid("workload.mean_duration", "must be > 0"));
        }
        Ok(())
    }
}

/// Probability mass of chain length `k` under the truncated power law.
pub fn chain_length_pmf(k: usize, exponent: f64, min: usize, max: usize) -> f64 {
    if k < min || k > max {
        return 0.0;
    }
    let norm: f64 = (min..=max).map(|j| (j as f64).powf(-exponent)).sum();
    (k as f64).powf(-exponent) / norm
}

/// Draws a chain length `k` with probability proportional to `k^-exponent`
/// over `min..=max`.
pub fn sample_chain_length<R: Rng + ?Sized>(rng: &mut R, exponent: f64, min: usize, max: usize) -> usize {
    if min >= max {
        return min;
    }
    let weights: Vec<f64> = (min..=max).map(|k| (k as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (offset, w) in weights.iter().enumerate() {
        if u < *w {
            return min + offset;
        }
        u -= w;
    }
    max
}

pub fn generate_request<R: Rng + ?Sized>(
    rng: &mut R,
    coverage: &CoverageMap,
    params: &WorkloadParams,
    id: RequestId,
    arrival_slot: u64,
) -> UserRequest {
    let len = sample_chain_length(rng, params.chain_exponent, params.chain_min, params.chain_max);
    let source = coverage.sample_covered_point(rng);
    let destination = coverage.sample_covered_point(rng);
    let int = params.integer_demands;

    let mut vnfs = Vec::with_capacity(len);
    vnfs.push(Vnf::access());
    for _ in 1..len - 1 {
        vnfs.push(Vnf {
            cpu_demand: Fixed::from_f64(params.cpu.sample(rng, int)),
            mem_demand: Fixed::from_f64(params.mem.sample(rng, int)),
            compute_time: Fixed::from_f64(params.compute_ms.sample(rng, false)),
        });
    }
    vnfs.push(Vnf::access());
    let chain_bandwidth = (0..len - 1).map(|_| Fixed::from_f64(params.bandwidth_mbps.sample(rng, false))).collect();

    UserRequest {
        id,
        vnfs,
        chain_bandwidth,
        source,
        destination,
        max_delay: Fixed::from_f64(params.max_delay_ms),
        arrival_slot,
        duration: sample_duration(rng, params.mean_duration),
    }
}

/// Number of arrivals in one slot, Poisson with mean `lambda`.
pub fn sample_arrivals<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(lambda).expect("lambda > 0");
    poisson.sample(rng) as u64
}

/// Lifetime in whole slots: an exponential with the given mean, rounded up,
/// never below one slot.
pub fn sample_duration<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let exp = Exp::new(1.0 / mean).expect("mean > 0");
    let x: f64 = exp.sample(rng);
    (x.ceil() as u64).max(1)
}

pub fn write_requests_json<W: Write>(writer: W, requests: &[UserRequest]) -> Result<()> {
    serde_json::to_writer_pretty(writer, requests)?;
    Ok(())
}

pub fn read_requests_json<R: Read>(reader: R) -> Result<Vec<UserRequest>> {
    let requests: Vec<UserRequest> = serde_json::from_reader(reader)?;
    for r in &requests {
        r.validate()?;
    }
    Ok(requests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_constellation, ConstellationParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coverage() -> CoverageMap {
        let net = build_constellation(&ConstellationParams::default());
        CoverageMap::new(&net, 0.1, 0.0, 13.1).unwrap()
    }

    #[test]
    fn pmf_values() {
        // 0.25 / sum_{j=2..7} j^-2
        let norm: f64 = 1.0 / 4.0 + 1.0 / 9.0 + 1.0 / 16.0 + 1.0 / 25.0 + 1.0 / 36.0 + 1.0 / 49.0;
        assert!((norm - 0.511797).abs() < 1e-6);
        assert!((chain_length_pmf(2, 2.0, 2, 7) - 0.4885).abs() < 1e-4);
        assert!((chain_length_pmf(7, 2.0, 2, 7) - 0.0399).abs() < 1e-4);
        let total: f64 = (2..=7).map(|k| chain_length_pmf(k, 2.0, 2, 7)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_chain_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| sample_chain_length(&mut rng, 2.0, 4, 4) == 4));
    }

    #[test]
    fn chain_length_frequency_of_seven() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 1_000_000;
        let sevens = (0..n).filter(|_| sample_chain_length(&mut rng, 2.0, 2, 7) == 7).count();
        let freq = sevens as f64 / n as f64;
        assert!((freq - 0.0399).abs() < 0.001, "{freq}");
    }

    #[test]
    fn chain_length_histogram_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000usize;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            counts[sample_chain_length(&mut rng, 2.0, 2, 7)] += 1;
        }
        for k in 2..=7 {
            let p = chain_length_pmf(k, 2.0, 2, 7);
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            let diff = (counts[k] as f64 - n as f64 * p).abs();
            assert!(diff < 3.0 * sigma, "k={k}: {} vs {}", counts[k], n as f64 * p);
        }
    }

    #[test]
    fn collapsed_ranges_are_deterministic() {
        let params = WorkloadParams {
            chain_min: 4,
            chain_max: 4,
            cpu: Range::new(1.5, 1.5),
            mem: Range::new(3.0, 3.0),
            compute_ms: Range::new(25.0, 25.0),
            bandwidth_mbps: Range::new(2.0, 2.0),
            ..Default::default()
        };
        let cov = coverage();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = generate_request(&mut rng, &cov, &params, 0, 0);
        assert_eq!(r.chain_len(), 4);
        assert_eq!(r.interior_count(), 2);
        assert_eq!(r.chain_bandwidth.len(), 3);
        for i in r.interior() {
            assert_eq!(r.vnfs[i].cpu_demand, Fixed::from_f64(1.5));
            assert_eq!(r.vnfs[i].mem_demand, Fixed::from_f64(3.0));
            assert_eq!(r.vnfs[i].compute_time, Fixed::from_f64(25.0));
        }
        assert!(r.chain_bandwidth.iter().all(|&b| b == Fixed::from_f64(2.0)));
        r.validate().unwrap();
    }

    #[test]
    fn generated_chains_have_zero_demand_access_functions() {
        let cov = coverage();
        let params = WorkloadParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for id in 0..5000 {
            let r = generate_request(&mut rng, &cov, &params, id, 0);
            r.validate().unwrap();
            assert!((2..=7).contains(&r.chain_len()));
            for i in r.interior() {
                let v = &r.vnfs[i];
                assert!(v.cpu_demand.is_positive() && v.mem_demand.is_positive() && v.compute_time.is_positive());
                assert!((1.0..=2.0).contains(&v.cpu_demand.to_f64()));
                assert!((2.0..=4.0).contains(&v.mem_demand.to_f64()));
                assert!((20.0..=30.0).contains(&v.compute_time.to_f64()));
            }
        }
    }

    #[test]
    fn mean_interior_cpu_demand() {
        let cov = coverage();
        let params = WorkloadParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut sum, mut n) = (0.0, 0usize);
        while n < 100_000 {
            let r = generate_request(&mut rng, &cov, &params, 0, 0);
            for i in r.interior() {
                sum += r.vnfs[i].cpu_demand.to_f64();
                n += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn integer_demands() {
        let params = WorkloadParams { integer_demands: true, ..Default::default() };
        let cov = coverage();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let r = generate_request(&mut rng, &cov, &params, 0, 0);
            for i in r.interior() {
                let c = r.vnfs[i].cpu_demand.to_f64();
                assert!(c == 1.0 || c == 2.0);
            }
        }
    }

    #[test]
    fn arrivals_and_durations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!((0..100).all(|_| sample_arrivals(&mut rng, 0.0) == 0));

        let slots = 10_000;
        let total: u64 = (0..slots).map(|_| sample_arrivals(&mut rng, 290.0)).sum();
        let mean = total as f64 / slots as f64;
        assert!((mean - 290.0).abs() < 6.0, "{mean}");

        // E[ceil(X)] for X ~ Exp(mean 3) is 1 / (1 - e^{-1/3}).
        let expected = 1.0 / (1.0 - (-1.0f64 / 3.0).exp());
        let n = 200_000;
        let durations: Vec<u64> = (0..n).map(|_| sample_duration(&mut rng, 3.0)).collect();
        assert!(durations.iter().all(|&d| d >= 1));
        let mean = durations.iter().sum::<u64>() as f64 / n as f64;
        assert!((mean - expected).abs() < 0.03, "{mean} vs {expected}");
        assert!((expected - 3.5277).abs() < 1e-3);
    }

    #[test]
    fn identical_seeds_identical_workloads() {
        let cov = coverage();
        let params = WorkloadParams::default();
        let gen = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let reqs: Vec<_> = (0..200).map(|id| generate_request(&mut rng, &cov, &params, id, 0)).collect();
            let mut buf = Vec::new();
            write_requests_json(&mut buf, &reqs).unwrap();
            buf
        };
        assert_eq!(gen(11), gen(11));
        assert_ne!(gen(11), gen(12));
    }

    #[test]
    fn json_round_trip() {
        let cov = coverage();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let reqs: Vec<_> =
            (0..20).map(|id| generate_request(&mut rng, &cov, &WorkloadParams::default(), id, 3)).collect();
        let mut buf = Vec::new();
        write_requests_json(&mut buf, &reqs).unwrap();
        assert_eq!(read_requests_json(&buf[..]).unwrap(), reqs);
    }

    #[test]
    fn params_validation() {
        assert!(WorkloadParams::default().validate().is_ok());
        let bad = WorkloadParams { chain_min: 1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = WorkloadParams { cpu: Range::new(2.0, 1.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = WorkloadParams { mean_duration: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
