use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, TrySendError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use super::{SimConfig, SimState};

/// Enqueues one refresh signal per whole frame interval in `elapsed`,
/// skipping signals while the queue is full. Returns how many were enqueued.
pub fn tick_producer(state: &mut SimState, elapsed: f64, config: &SimConfig) -> usize {
    if !(elapsed > 0.0) {
        return 0;
    }
    let due = (elapsed / config.frame_interval + 1e-9).floor() as usize;
    let room = config.queue_max.saturating_sub(state.queue_depth);
    let n = due.min(room);
    state.queue_depth += n;
    state.signals_sent += n as u64;
    n
}

/// Processes every pending signal and returns the current frame index.
pub fn drain_signals(state: &mut SimState, config: &SimConfig) -> usize {
    state.signals_processed += state.queue_depth as u64;
    state.queue_depth = 0;
    state.frame_index(config.frames_n)
}

/// Wall-clock producer thread feeding a bounded queue, for interactive use.
/// Batch runs use the logical clock in [`tick_producer`] instead; both obey
/// the same queue contract.
pub struct SignalProducer {
    rx: Receiver<()>,
    stop: Arc<AtomicBool>,
    sent: Arc<AtomicU64>,
    handle: Option<JoinHandle<()>>,
}

impl SignalProducer {
    pub fn spawn(interval: Duration, capacity: usize) -> Self {
        let (tx, rx) = sync_channel(capacity);
        let stop = Arc::new(AtomicBool::new(false));
        let sent = Arc::new(AtomicU64::new(0));
        let (stop2, sent2) = (stop.clone(), sent.clone());
        let handle = std::thread::spawn(move || {
            while !stop2.load(Ordering::Relaxed) {
                match tx.try_send(()) {
                    Ok(()) => {
                        sent2.fetch_add(1, Ordering::Relaxed);
                    }
                    Err(TrySendError::Full(())) => {}
                    Err(TrySendError::Disconnected(())) => break,
                }
                std::thread::sleep(interval);
            }
        });
        SignalProducer {
            rx,
            stop,
            sent,
            handle: Some(handle),
        }
    }

    pub fn signals_sent(&self) -> u64 {
        self.sent.load(Ordering::Relaxed)
    }

    /// Drains whatever is queued into `state` and returns the frame index.
    pub fn drain_into(&self, state: &mut SimState, config: &SimConfig) -> usize {
        let mut n = 0u64;
        while self.rx.try_recv().is_ok() {
            n += 1;
        }
        state.signals_sent = self.signals_sent();
        state.signals_processed += n;
        state.queue_depth = 0;
        state.frame_index(config.frames_n)
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for SignalProducer {
    fn drop(&mut self) {
        self.shutdown();
    }
}
