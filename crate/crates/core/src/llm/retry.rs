//! Bounded-retry wrapper over any [`ChatBackend`].

use std::time::Duration;

use super::{ChatBackend, ChatTurn, GenerationParams, LlmError};

/// How many times to try and how long to wait between tries. Attempt `i`
/// (1-based) sleeps `backoff[min(i-1, len-1)]` before attempt `i+1`; an
/// empty schedule retries immediately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff: vec![Duration::from_millis(250), Duration::from_millis(1000)],
        }
    }
}

impl RetryPolicy {
    /// Single attempt, no waiting — the wrapper becomes a no-op.
    pub fn none() -> Self {
        RetryPolicy {
            max_attempts: 1,
            backoff: Vec::new(),
        }
    }

    fn delay_after(&self, attempt: u32) -> Option<Duration> {
        if self.backoff.is_empty() {
            return None;
        }
        let index = (attempt as usize - 1).min(self.backoff.len() - 1);
        Some(self.backoff[index])
    }
}

/// Retries `inner` on [retryable](LlmError::is_retryable) errors only;
/// permanent errors and exhausted budgets propagate the last error.
pub struct RetryingBackend<B> {
    inner: B,
    policy: RetryPolicy,
}

pub fn with_retry<B: ChatBackend>(inner: B, policy: RetryPolicy) -> RetryingBackend<B> {
    assert!(
        policy.max_attempts >= 1,
        "retry policy needs at least one attempt"
    );
    RetryingBackend { inner, policy }
}

impl<B: ChatBackend> ChatBackend for RetryingBackend<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, turns: &[ChatTurn], params: &GenerationParams) -> Result<String, LlmError> {
        let mut attempt = 1;
        loop {
            match self.inner.complete(turns, params) {
                Ok(reply) => return Ok(reply),
                Err(err) if err.is_retryable() && attempt < self.policy.max_attempts => {
                    log::warn!(
                        "backend {} attempt {attempt}/{} failed, retrying: {err}",
                        self.inner.name(),
                        self.policy.max_attempts
                    );
                    if let Some(delay) = self.policy.delay_after(attempt) {
                        std::thread::sleep(delay);
                    }
                    attempt += 1;
                }
                Err(err) => return Err(err),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;
    use std::time::Instant;

    /// Fails with the queued errors, then echoes "ok" forever.
    struct FlakyBackend {
        failures: Mutex<Vec<LlmError>>,
        calls: Mutex<u32>,
    }

    impl FlakyBackend {
        fn new(failures: Vec<LlmError>) -> Self {
            FlakyBackend {
                failures: Mutex::new(failures),
                calls: Mutex::new(0),
            }
        }

        fn calls(&self) -> u32 {
            *self.calls.lock().unwrap()
        }
    }

    impl ChatBackend for FlakyBackend {
        fn name(&self) -> &str {
            "flaky"
        }

        fn complete(&self, _: &[ChatTurn], _: &GenerationParams) -> Result<String, LlmError> {
            *self.calls.lock().unwrap() += 1;
            let mut failures = self.failures.lock().unwrap();
            if failures.is_empty() {
                Ok("ok".into())
            } else {
                Err(failures.remove(0))
            }
        }
    }

    fn transient() -> LlmError {
        LlmError::Status {
            backend: "flaky".into(),
            status: 503,
            message: "busy".into(),
        }
    }

    fn turns() -> Vec<ChatTurn> {
        vec![ChatTurn::user("x")]
    }

    fn quick(max_attempts: u32) -> RetryPolicy {
        RetryPolicy {
            max_attempts,
            backoff: Vec::new(),
        }
    }

    #[test]
    fn two_failures_then_success_within_three_attempts() {
        let inner = FlakyBackend::new(vec![transient(), transient()]);
        let backend = with_retry(inner, quick(3));
        let reply = backend
            .complete(&turns(), &GenerationParams::default())
            .unwrap();
        assert_eq!(reply, "ok");
        assert_eq!(backend.inner.calls(), 3);
    }

    #[test]
    fn always_failing_stops_after_budget() {
        let inner = FlakyBackend::new(vec![transient(), transient(), transient(), transient()]);
        let backend = with_retry(inner, quick(2));
        let err = backend
            .complete(&turns(), &GenerationParams::default())
            .unwrap_err();
        assert!(matches!(err, LlmError::Status { status: 503, .. }));
        assert_eq!(backend.inner.calls(), 2);
    }

    #[test]
    fn permanent_errors_do_not_retry() {
        let inner = FlakyBackend::new(vec![LlmError::Status {
            backend: "flaky".into(),
            status: 401,
            message: "bad key".into(),
        }]);
        let backend = with_retry(inner, quick(5));
        assert!(backend
            .complete(&turns(), &GenerationParams::default())
            .is_err());
        assert_eq!(backend.inner.calls(), 1);
    }

    #[test]
    fn transparent_on_first_try_success() {
        let inner = FlakyBackend::new(vec![]);
        let backend = with_retry(inner, RetryPolicy::default());
        assert_eq!(
            backend
                .complete(&turns(), &GenerationParams::default())
                .unwrap(),
            "ok"
        );
        assert_eq!(backend.inner.calls(), 1);
        assert_eq!(backend.name(), "flaky");
    }

    // Oracle: wall-clock timestamps around the call must bound the summed
    // schedule from below.
    #[test]
    fn backoff_schedule_is_respected() {
        let inner = FlakyBackend::new(vec![transient(), transient()]);
        let policy = RetryPolicy {
            max_attempts: 3,
            backoff: vec![Duration::from_millis(10), Duration::from_millis(20)],
        };
        let backend = with_retry(inner, policy);
        let start = Instant::now();
        backend
            .complete(&turns(), &GenerationParams::default())
            .unwrap();
        assert!(
            start.elapsed() >= Duration::from_millis(30),
            "elapsed {:?} < scheduled 30ms",
            start.elapsed()
        );
    }

    #[test]
    fn backoff_reuses_last_entry_when_schedule_is_short() {
        let policy = RetryPolicy {
            max_attempts: 4,
            backoff: vec![Duration::from_millis(5)],
        };
        assert_eq!(policy.delay_after(1), Some(Duration::from_millis(5)));
        assert_eq!(policy.delay_after(3), Some(Duration::from_millis(5)));
        assert_eq!(RetryPolicy::none().delay_after(1), None);
    }
}
