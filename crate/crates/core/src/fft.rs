//! Discrete Fourier transform for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z reformulation on top of it.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};


#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    #[inline]
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    #[inline]
    pub fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }
}

impl Add for Complex {
    type Output = Complex;
    #[inline]
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    #[inline]
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    twiddles: Vec<Complex>,
    bitrev: Vec<usize>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let bits = len.trailing_zeros();
        let bitrev = (0..len)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..len / 2)
            .map(|k| Complex::from_angle(-2.0 * PI * k as f64 / len as f64))
            .collect();
        Self {
            len,
            twiddles,
            bitrev,
        }
    }

    fn forward(&self, buf: &mut [Complex]) {
        let n = self.len;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    fn inverse(&self, buf: &mut [Complex]) {
        for c in buf.iter_mut() {
            *c = c.conj();
        }
        self.forward(buf);
        let k = 1.0 / self.len as f64;
        for c in buf.iter_mut() {
            *c = c.conj().scale(k);
        }
    }
}

#[derive(Debug, Clone)]
enum Algorithm {
    Radix2(Radix2),
    Bluestein {
        inner: Radix2,
        chirp: Vec<Complex>,
        kernel: Vec<Complex>,
    },
}

/// Precomputed transform of one fixed length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    algorithm: Algorithm,
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        if len.is_power_of_two() {
            return Self {
                len,
                algorithm: Algorithm::Radix2(Radix2::new(len)),
            };
        }
        let conv_len = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(conv_len);
        let modulus = 2 * len as u64;
        // exp(-i*pi*n^2/len), with n^2 reduced mod 2*len for accuracy
        let chirp: Vec<Complex> = (0..len as u64)
            .map(|n| Complex::from_angle(-PI * ((n * n) % modulus) as f64 / len as f64))
            .collect();
        let mut kernel = vec![Complex::ZERO; conv_len];
        kernel[0] = chirp[0].conj();
        for n in 1..len {
            let c = chirp[n].conj();
            kernel[n] = c;
            kernel[conv_len - n] = c;
        }
        inner.forward(&mut kernel);
        Self {
            len,
            algorithm: Algorithm::Bluestein {
                inner,
                chirp,
                kernel,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward DFT, `X[k] = sum_n x[n] exp(-2*pi*i*k*n/N)`.
    pub fn forward(&self, buf: &mut [Complex]) {
        assert_eq!(buf.len(), self.len);
        match &self.algorithm {
            Algorithm::Radix2(r) => r.forward(buf),
            Algorithm::Bluestein {
                inner,
                chirp,
                kernel,
            } => {
                let mut work = vec![Complex::ZERO; inner.len];
                for ((w, x), c) in work.iter_mut().zip(buf.iter()).zip(chirp.iter()) {
                    *w = *x * *c;
                }
                inner.forward(&mut work);
                for (w, k) in work.iter_mut().zip(kernel.iter()) {
                    *w = *w * *k;
                }
                inner.inverse(&mut work);
                for ((out, w), c) in buf.iter_mut().zip(work.iter()).zip(chirp.iter()) {
                    *out = *w * *c;
                }
            }
        }
    }

    /// Magnitudes of bins `0..=len/2` of a real signal zero-padded to the plan
    /// length.
    pub fn real_magnitudes(&self, input: &[f64]) -> Vec<f64> {
        assert!(input.len() <= self.len, "input longer than transform");
        let mut buf = vec![Complex::ZERO; self.len];
        for (b, &x) in buf.iter_mut().zip(input.iter()) {
            b.re = x;
        }
        self.forward(&mut buf);
        buf[..self.len / 2 + 1].iter().map(|c| c.norm()).collect()
    }
}
