//! Exponential backoff with jitter, and a minimum-interval request gate.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    /// Fraction of each delay randomized, in [0, 1].
    pub jitter: f64,
}

impl RetryPolicy {
    pub fn new(max_attempts: u32, base_delay: Duration) -> Self {
        Self {
            max_attempts: max_attempts.max(1),
            base_delay,
            max_delay: Duration::from_secs(30),
            jitter: 0.25,
        }
    }

    /// Delay before retry number `attempt` (1-based: the wait after the
    /// first failure is `delay(1)`).
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = self
            .base_delay
            .saturating_mul(1u32 << (attempt.saturating_sub(1)).min(16));
        let capped = exp.min(self.max_delay);
        if self.jitter <= 0.0 || capped.is_zero() {
            return capped;
        }
        let factor = 1.0 + rand::rng().random_range(-self.jitter..=self.jitter);
        capped.mul_f64(factor.max(0.0))
    }
}

/// What a failed attempt means for the retry loop.
pub enum Attempt<E> {
    Retry(E),
    Fail(E),
}

/// Runs `op` until it succeeds, fails permanently, or attempts run out.
/// The last error is returned on exhaustion.
pub fn with_retry<T, E>(policy: &RetryPolicy, mut op: impl FnMut(u32) -> Result<T, Attempt<E>>) -> Result<T, E> {
    let mut attempt = 1;
    loop {
        match op(attempt) {
            Ok(v) => return Ok(v),
            Err(Attempt::Fail(e)) => return Err(e),
            Err(Attempt::Retry(e)) => {
                if attempt >= policy.max_attempts {
                    return Err(e);
                }
                thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
        }
    }
}

/// Admits at most one caller per `interval`; callers block until admitted.
#[derive(Debug)]
pub struct RateGate {
    interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateGate {
    pub fn per_second(requests_per_second: f64) -> Self {
        let interval = if requests_per_second > 0.0 && requests_per_second.is_finite() {
            Duration::from_secs_f64(1.0 / requests_per_second)
        } else {
            Duration::ZERO
        };
        Self::with_interval(interval)
    }

    pub fn with_interval(interval: Duration) -> Self {
        Self {
            interval,
            last: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    pub fn wait(&self) {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let next = prev + self.interval;
            let now = Instant::now();
            if next > now {
                thread::sleep(next - now);
            }
        }
        *last = Some(Instant::now());
    }
}
