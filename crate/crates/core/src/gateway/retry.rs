//! Exponential-backoff retry with an injectable clock, so tests run the full
//! policy in microseconds.

use super::GatewayError;
use std::time::Duration;

/// Clock abstraction. Production sleeps the thread; tests record the delays.
pub trait Sleeper: Send {
    fn sleep(&mut self, d: Duration);
}

/// Real wall-clock sleeper.
pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&mut self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Base 1s, factor 2, at most 5 tries. Only transient errors are retried.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_tries: u32,
    pub base: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_tries: 5, base: Duration::from_secs(1), factor: 2.0 }
    }
}

impl RetryPolicy {
    /// Run `op` until it succeeds, fails fatally, or the tries run out.
    /// `op` receives the 0-based attempt number.
    pub fn run<T>(
        &self,
        sleeper: &mut dyn Sleeper,
        mut op: impl FnMut(u32) -> Result<T, GatewayError>,
    ) -> Result<T, GatewayError> {
        assert!(self.max_tries >= 1);
        let mut delay = self.base;
        let mut last = GatewayError::Transport("no attempts made".to_string());
        for attempt in 0..self.max_tries {
            if attempt > 0 {
                sleeper.sleep(delay);
                delay = delay.mul_f64(self.factor);
            }
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_transient() => last = e,
                Err(e) => return Err(e),
            }
        }
        Err(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Records requested delays instead of sleeping.
    pub struct VirtualClock {
        pub slept: Vec<Duration>,
    }

    impl Sleeper for VirtualClock {
        fn sleep(&mut self, d: Duration) {
            self.slept.push(d);
        }
    }

    #[test]
    fn two_transient_failures_then_success() {
        let policy = RetryPolicy::default();
        let mut clock = VirtualClock { slept: vec![] };
        let mut attempts = 0;
        let out = policy.run(&mut clock, |_| {
            attempts += 1;
            if attempts <= 2 {
                Err(GatewayError::Transport("boom".to_string()))
            } else {
                Ok(attempts)
            }
        });
        assert_eq!(out.unwrap(), 3);
        assert_eq!(attempts, 3);
        assert_eq!(clock.slept, vec![Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn exhausts_after_five_tries() {
        let policy = RetryPolicy::default();
        let mut clock = VirtualClock { slept: vec![] };
        let mut attempts = 0;
        let out: Result<(), _> = policy.run(&mut clock, |_| {
            attempts += 1;
            Err(GatewayError::Transport("down".to_string()))
        });
        assert!(matches!(out, Err(GatewayError::Transport(_))));
        assert_eq!(attempts, 5);
        assert_eq!(
            clock.slept,
            vec![
                Duration::from_secs(1),
                Duration::from_secs(2),
                Duration::from_secs(4),
                Duration::from_secs(8)
            ]
        );
    }

    #[test]
    fn auth_errors_are_not_retried() {
        let policy = RetryPolicy::default();
        let mut clock = VirtualClock { slept: vec![] };
        let mut attempts = 0;
        let out: Result<(), _> = policy.run(&mut clock, |_| {
            attempts += 1;
            Err(GatewayError::Auth("bad key".to_string()))
        });
        assert!(matches!(out, Err(GatewayError::Auth(_))));
        assert_eq!(attempts, 1);
        assert!(clock.slept.is_empty());
    }
}
