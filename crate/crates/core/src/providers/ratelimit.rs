//! Token-bucket rate limiter shared by the HTTP adapters.

use std::sync::Mutex;
use std::time::{Duration, Instant};

#[derive(Debug)]
pub struct TokenBucket {
    rate_per_s: f64,
    capacity: f64,
    state: Mutex<State>,
}

#[derive(Debug)]
struct State {
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    /// A bucket refilling at `rate_per_s` that holds at most `capacity`
    /// tokens. It starts full.
    pub fn new(rate_per_s: f64, capacity: f64) -> Self {
        assert!(rate_per_s > 0.0 && capacity >= 1.0, "invalid token bucket");
        Self::starting_at(rate_per_s, capacity, Instant::now())
    }

    pub fn starting_at(rate_per_s: f64, capacity: f64, now: Instant) -> Self {
        Self {
            rate_per_s,
            capacity,
            state: Mutex::new(State {
                tokens: capacity,
                last: now,
            }),
        }
    }

    /// Take a token at time `now`, or report how long until one is free.
    pub fn try_acquire_at(&self, now: Instant) -> Result<(), Duration> {
        let mut s = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let elapsed = now.saturating_duration_since(s.last).as_secs_f64();
        s.tokens = (s.tokens + elapsed * self.rate_per_s).min(self.capacity);
        s.last = s.last.max(now);
        if s.tokens >= 1.0 {
            s.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - s.tokens) / self.rate_per_s))
        }
    }

    /// Block until a token is available.
    pub fn acquire(&self) {
        while let Err(wait) = self.try_acquire_at(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
}
