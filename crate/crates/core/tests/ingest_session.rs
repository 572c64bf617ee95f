mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{note_jpeg, spawn_camsim, spawn_on};
use drishti::camsim::SourceSet;
use drishti::ingest::{stream_session, Frame, FrameBus, SessionOptions};
use drishti::MonoClock;
use tokio_util::sync::CancellationToken;

fn notes(n: u64, looping: bool) -> SourceSet {
    SourceSet::from_payloads((0..n).map(|v| note_jpeg("50", v)).collect())
        .unwrap()
        .with_loop(looping)
        .with_interval(Duration::from_millis(10))
}

async fn wait_for(mut cond: impl FnMut() -> bool, limit: Duration) -> bool {
    let deadline = Instant::now() + limit;
    while Instant::now() < deadline {
        if cond() {
            return true;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    cond()
}

#[tokio::test]
async fn three_frames_then_reconnect_cycle() {
    let (addr, _h) = spawn_camsim(notes(3, false), "drishtiframe").await;
    let bus = Arc::new(FrameBus::<Arc<Frame>>::new(8));
    let cancel = CancellationToken::new();
    let session = {
        let (bus, cancel) = (bus.clone(), cancel.clone());
        tokio::spawn(async move {
            let clock = MonoClock::new();
            stream_session(
                &format!("http://{addr}/stream"),
                &bus,
                &clock,
                &SessionOptions::default(),
                cancel,
            )
            .await
        })
    };
    assert!(wait_for(|| bus.stats().enqueued == 3, Duration::from_secs(5)).await);
    // first backoff is 250 ms; leave room for exactly one retry
    tokio::time::sleep(Duration::from_millis(400)).await;
    cancel.cancel();
    let report = session.await.unwrap();
    assert_eq!(report.frames_ingested, 3);
    assert!(report.reconnects >= 1);
    assert!(
        report.connect_errors >= 1,
        "retry against an exhausted source must fail"
    );
    let ids: Vec<u64> = std::iter::from_fn(|| bus.try_pop()).map(|f| f.id).collect();
    assert_eq!(ids, vec![0, 1, 2]);
}

#[tokio::test]
async fn recovers_after_server_outage() {
    let probe = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = probe.local_addr().unwrap();
    drop(probe);

    let bus = Arc::new(FrameBus::<Arc<Frame>>::new(4));
    let cancel = CancellationToken::new();
    let session = {
        let (bus, cancel) = (bus.clone(), cancel.clone());
        tokio::spawn(async move {
            let clock = MonoClock::new();
            stream_session(
                &format!("http://{addr}/stream"),
                &bus,
                &clock,
                &SessionOptions::default(),
                cancel,
            )
            .await
        })
    };
    tokio::time::sleep(Duration::from_secs(1)).await;
    assert_eq!(bus.stats().enqueued, 0);
    let listener = tokio::net::TcpListener::bind(addr).await.unwrap();
    let _h = spawn_on(listener, notes(2, true), "drishtiframe");
    assert!(wait_for(|| bus.stats().enqueued >= 3, Duration::from_secs(10)).await);
    cancel.cancel();
    let report = session.await.unwrap();
    assert!(report.reconnects >= 1);
    assert!(report.connect_errors >= 1);
    assert!(report.frames_ingested >= 3);
}

#[tokio::test]
async fn cancel_during_backoff_is_prompt() {
    let probe = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = probe.local_addr().unwrap();
    drop(probe);
    let bus = Arc::new(FrameBus::<Arc<Frame>>::new(4));
    let cancel = CancellationToken::new();
    let opts = SessionOptions {
        backoff_base: Duration::from_secs(5),
        ..SessionOptions::default()
    };
    let session = {
        let (bus, cancel) = (bus.clone(), cancel.clone());
        tokio::spawn(async move {
            let clock = MonoClock::new();
            stream_session(
                &format!("http://{addr}/stream"),
                &bus,
                &clock,
                &opts,
                cancel,
            )
            .await
        })
    };
    tokio::time::sleep(Duration::from_millis(300)).await;
    let t0 = Instant::now();
    cancel.cancel();
    let report = session.await.unwrap();
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_millis(100), "took {elapsed:?}");
    assert_eq!(report.frames_ingested, 0);
    assert!(report.connect_errors >= 1);
}
