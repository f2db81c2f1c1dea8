use std::sync::Mutex;
use std::time::Instant;

/// Seconds since the clock started.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

/// Test clock moved by hand.
#[derive(Debug, Default)]
pub struct ManualClock(Mutex<f64>);

impl ManualClock {
    pub fn new(t: f64) -> Self {
        ManualClock(Mutex::new(t))
    }

    pub fn set(&self, t: f64) {
        *self.0.lock().expect("clock lock") = t;
    }

    pub fn advance(&self, dt: f64) {
        *self.0.lock().expect("clock lock") += dt;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        *self.0.lock().expect("clock lock")
    }
}

/// Real time, optionally sped up (e.g. `scale = 20` makes a 20 s speech
/// job finish in one real second).
#[derive(Debug)]
pub struct ScaledClock {
    start: Instant,
    scale: f64,
}

impl ScaledClock {
    pub fn new(scale: f64) -> Self {
        assert!(scale > 0.0, "clock scale must be positive");
        ScaledClock {
            start: Instant::now(),
            scale,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Clock for ScaledClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * self.scale
    }
}
