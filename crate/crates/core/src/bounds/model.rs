//! Witness value and analytic gradient for mixtures of block-product states
//! in the at-most-one-photon-per-mode space.
//!
//! A block on `s` modes is stored as `1 + s` complex amplitudes (vacuum and
//! the single excitations) plus, for `s >= 2`, one amplitude standing in for
//! the whole multi-excitation sector: that sector only ever enters the
//! witness through the normalization, so its internal structure is
//! irrelevant.

use num_complex::Complex64 as C64;

use super::Partition;

/// Number of complex amplitudes used for a block of `s` modes.
pub(crate) fn block_len(s: usize) -> usize {
    1 + s + usize::from(s >= 2)
}

/// `y_c` normalization that makes balanced coherent states score 1.
pub fn yc_prefactor(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 1.0)
}

/// Real Sylvester-Hadamard matrix scaled to be unitary (`n` a power of two).
pub fn hadamard(n: usize) -> Vec<Vec<f64>> {
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if (i & j).count_ones() % 2 == 0 { s } else { -s })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
struct Block {
    modes: Vec<usize>,
    offset: usize,
}

#[derive(Clone, Debug)]
struct Component {
    blocks: Vec<Block>,
    /// `(block, position inside block)` for every mode
    place: Vec<(usize, usize)>,
}

/// Parameter layout: `R` weight logits, then the real and imaginary parts
/// of every block amplitude, component by component.
#[derive(Clone, Debug)]
pub struct MixtureModel {
    n: usize,
    components: Vec<Component>,
    partitions: Vec<Partition>,
    dim: usize,
    h: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub p0: f64,
    pub p1: f64,
    pub p_ge2: f64,
    pub yc: f64,
    pub delta: f64,
}

impl MixtureModel {
    pub fn new(partitions: Vec<Partition>) -> Self {
        let n = partitions[0].num_modes();
        assert!(n.is_power_of_two() && n >= 2, "mode count must be a power of two");
        let r = partitions.len();
        let mut offset = r;
        let components = partitions
            .iter()
            .map(|p| {
                let mut place = vec![(0, 0); n];
                let blocks = p
                    .blocks()
                    .iter()
                    .enumerate()
                    .map(|(bi, modes)| {
                        for (pos, &m) in modes.iter().enumerate() {
                            place[m] = (bi, pos);
                        }
                        let b = Block {
                            modes: modes.clone(),
                            offset,
                        };
                        offset += 2 * block_len(modes.len());
                        b
                    })
                    .collect();
                Component { blocks, place }
            })
            .collect();
        Self {
            n,
            components,
            partitions,
            dim: offset,
            h: hadamard(n),
        }
    }

    pub fn num_params(&self) -> usize {
        self.dim
    }

    pub fn num_modes(&self) -> usize {
        self.n
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        softmax(&x[..self.components.len()])
    }

    /// Normalized block vectors of every component.
    pub fn block_states(&self, x: &[f64]) -> Vec<Vec<Vec<C64>>> {
        self.components
            .iter()
            .map(|c| {
                c.blocks
                    .iter()
                    .map(|b| {
                        let len = block_len(b.modes.len());
                        let u: Vec<C64> = (0..len)
                            .map(|i| C64::new(x[b.offset + 2 * i], x[b.offset + 2 * i + 1]))
                            .collect();
                        let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
                        u.into_iter().map(|z| z / norm).collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `(vacuum amplitude, single-excitation amplitudes)` of each component.
    fn component_amplitudes(&self, states: &[Vec<Vec<C64>>]) -> Vec<(C64, Vec<C64>)> {
        self.components
            .iter()
            .zip(states)
            .map(|(c, v)| {
                let vac: C64 = v.iter().map(|b| b[0]).product();
                let singles = (0..self.n)
                    .map(|m| {
                        let (bi, pos) = c.place[m];
                        let others: C64 = v
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != bi)
                            .map(|(_, b)| b[0])
                            .product();
                        v[bi][1 + pos] * others
                    })
                    .collect();
                (vac, singles)
            })
            .collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Evaluation {
        let w = self.weights(x);
        let amps = self.component_amplitudes(&self.block_states(x));
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        let mut a = vec![0.0; self.n];
        for (wc, (vac, s)) in w.iter().zip(&amps) {
            p0 += wc * vac.norm_sqr();
            p1 += wc * s.iter().map(|z| z.norm_sqr()).sum::<f64>();
            for (i, ai) in a.iter_mut().enumerate() {
                let t: C64 = s.iter().zip(&self.h[i]).map(|(z, h)| z * h).sum();
                *ai += wc * t.norm_sqr();
            }
        }
        let p_ge2 = (1.0 - p0 - p1).max(0.0);
        let yc = yc_prefactor(self.n) * p_ge2 * p0 / (p1 * p1);
        let delta = 1.0 - a.iter().map(|x| x * x).sum::<f64>() / (p1 * p1);
        Evaluation {
            p0,
            p1,
            p_ge2,
            yc,
            delta,
        }
    }

    /// Penalized objective `Delta + mu (y_c - target)^2` and its gradient.
    pub fn objective(&self, x: &[f64], target: f64, mu: f64, grad: &mut [f64]) -> f64 {
        let n = self.n;
        let w = self.weights(x);
        let states = self.block_states(x);
        let amps = self.component_amplitudes(&states);

        let mut p0 = 0.0;
        let mut p1 = 0.0;
        let mut a = vec![0.0; n];
        let mut proj: Vec<Vec<C64>> = Vec::with_capacity(amps.len());
        for (wc, (vac, s)) in w.iter().zip(&amps) {
            p0 += wc * vac.norm_sqr();
            p1 += wc * s.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let t: Vec<C64> = (0..n)
                .map(|i| s.iter().zip(&self.h[i]).map(|(z, h)| z * h).sum())
                .collect();
            for i in 0..n {
                a[i] += wc * t[i].norm_sqr();
            }
            proj.push(t);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        if !(p1 > 1e-14) {
            return 1e6;
        }
        let p2 = 1.0 - p0 - p1;
        let pre = yc_prefactor(n);
        let yc = pre * p2 * p0 / (p1 * p1);
        let sum_a2: f64 = a.iter().map(|x| x * x).sum();
        let delta = 1.0 - sum_a2 / (p1 * p1);
        let r = yc - target;
        let cost = delta + mu * r * r;

        // adjoints of p0, p1 and a_i
        let dy_dp0 = pre * (p2 - p0) / (p1 * p1);
        let dy_dp1 = pre * (-p0 / (p1 * p1) - 2.0 * p2 * p0 / (p1 * p1 * p1));
        let g0 = 2.0 * mu * r * dy_dp0;
        let g1 = 2.0 * sum_a2 / (p1 * p1 * p1) + 2.0 * mu * r * dy_dp1;
        let ga: Vec<f64> = a.iter().map(|ai| -2.0 * ai / (p1 * p1)).collect();

        let nc = self.components.len();
        let mut gw = vec![0.0; nc];
        for (c, comp) in self.components.iter().enumerate() {
            let (vac, s) = &amps[c];
            let t = &proj[c];
            gw[c] = g0 * vac.norm_sqr()
                + g1 * s.iter().map(|z| z.norm_sqr()).sum::<f64>()
                + (0..n).map(|i| ga[i] * t[i].norm_sqr()).sum::<f64>();

            // d cost / d conj(amplitude)
            let d_vac = vac * (w[c] * g0);
            let d_s: Vec<C64> = (0..n)
                .map(|m| {
                    let back: C64 = (0..n).map(|i| t[i] * (ga[i] * self.h[i][m])).sum();
                    (s[m] * g1 + back) * w[c]
                })
                .collect();

            let v = &states[c];
            let nb = comp.blocks.len();
            let mut gv: Vec<Vec<C64>> = v.iter().map(|b| vec![C64::new(0.0, 0.0); b.len()]).collect();
            let zero_product_except = |skip: &[usize]| -> C64 {
                v.iter()
                    .enumerate()
                    .filter(|(i, _)| !skip.contains(i))
                    .map(|(_, b)| b[0])
                    .product()
            };
            for bi in 0..nb {
                gv[bi][0] += zero_product_except(&[bi]).conj() * d_vac;
            }
            for m in 0..n {
                let (bm, pos) = comp.place[m];
                gv[bm][1 + pos] += zero_product_except(&[bm]).conj() * d_s[m];
                for bi in 0..nb {
                    if bi != bm {
                        let other = v[bm][1 + pos] * zero_product_except(&[bm, bi]);
                        gv[bi][0] += other.conj() * d_s[m];
                    }
                }
            }
            // through the normalization v = u / |u|
            for (bi, b) in comp.blocks.iter().enumerate() {
                let len = block_len(b.modes.len());
                let norm = (0..len)
                    .map(|i| x[b.offset + 2 * i].powi(2) + x[b.offset + 2 * i + 1].powi(2))
                    .sum::<f64>()
                    .sqrt()
                    .max(1e-300);
                let proj_re: f64 = v[bi]
                    .iter()
                    .zip(&gv[bi])
                    .map(|(vi, gi)| (vi.conj() * gi).re)
                    .sum();
                for i in 0..len {
                    let du = (gv[bi][i] - v[bi][i] * proj_re) / norm;
                    grad[b.offset + 2 * i] = 2.0 * du.re;
                    grad[b.offset + 2 * i + 1] = 2.0 * du.im;
                }
            }
        }
        let mean: f64 = w.iter().zip(&gw).map(|(a, b)| a * b).sum();
        for c in 0..nc {
            grad[c] = w[c] * (gw[c] - mean);
        }
        cost
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
