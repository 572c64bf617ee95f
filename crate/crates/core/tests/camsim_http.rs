mod common;

use std::time::{Duration, Instant};

use bytes::Bytes;
use common::{fake_jpeg, spawn_camsim};
use drishti::camsim::SourceSet;
use drishti::ingest::{parse_multipart, MultipartParser};
use futures::StreamExt;
use proptest::prelude::*;

fn set(payloads: Vec<Bytes>, looping: bool, interval_ms: u64) -> SourceSet {
    SourceSet::from_payloads(payloads)
        .unwrap()
        .with_loop(looping)
        .with_interval(Duration::from_millis(interval_ms))
}

async fn get(url: String) -> reqwest::Response {
    reqwest::get(url).await.unwrap()
}

#[tokio::test]
async fn capture_walks_then_wraps() {
    let (a, b) = (fake_jpeg(b"A"), fake_jpeg(b"B"));
    let (addr, _h) = spawn_camsim(set(vec![a.clone(), b.clone()], true, 10), "drishtiframe").await;
    let url = format!("http://{addr}/capture");
    let mut bodies = Vec::new();
    for _ in 0..3 {
        let r = get(url.clone()).await;
        assert_eq!(r.status(), 200);
        assert_eq!(r.headers()["content-type"], "image/jpeg");
        bodies.push(r.bytes().await.unwrap());
    }
    assert_eq!(bodies, vec![a.clone(), b, a]);
}

#[tokio::test]
async fn capture_exhausts_without_loop() {
    let (addr, _h) = spawn_camsim(
        set(vec![fake_jpeg(b"A"), fake_jpeg(b"B")], false, 10),
        "drishtiframe",
    )
    .await;
    let url = format!("http://{addr}/capture");
    assert_eq!(get(url.clone()).await.status(), 200);
    assert_eq!(get(url.clone()).await.status(), 200);
    assert_eq!(get(url).await.status(), 410);
}

#[tokio::test]
async fn single_part_then_terminator() {
    let a = fake_jpeg(b"only");
    let (addr, _h) = spawn_camsim(set(vec![a.clone()], false, 10), "drishtiframe").await;
    let r = get(format!("http://{addr}/stream")).await;
    assert_eq!(
        r.headers()["content-type"],
        "multipart/x-mixed-replace; boundary=drishtiframe"
    );
    let body = r.bytes().await.unwrap();
    let mut expected = format!(
        "\r\n--drishtiframe\r\nContent-Type: image/jpeg\r\nContent-Length: {}\r\n\r\n",
        a.len()
    )
    .into_bytes();
    expected.extend_from_slice(&a);
    expected.extend_from_slice(b"\r\n--drishtiframe--\r\n");
    assert_eq!(&body[..], &expected[..]);
}

#[tokio::test]
async fn stream_round_trips_through_parser() {
    let payloads = vec![fake_jpeg(&[7u8; 3000]), fake_jpeg(b"second")];
    let (addr, _h) = spawn_camsim(set(payloads.clone(), false, 5), "xyzzy").await;
    let body = get(format!("http://{addr}/stream"))
        .await
        .bytes()
        .await
        .unwrap();
    let out = parse_multipart([body], "xyzzy");
    assert!(out.error.is_none(), "{:?}", out.error);
    assert_eq!(out.parts, payloads);
}

#[tokio::test]
async fn part_rate_matches_interval() {
    let (addr, _h) = spawn_camsim(set(vec![fake_jpeg(b"A")], true, 100), "drishtiframe").await;
    let r = get(format!("http://{addr}/stream")).await;
    let mut body = r.bytes_stream();
    let mut parser = MultipartParser::new("drishtiframe");
    let deadline = Instant::now() + Duration::from_secs(1);
    let mut parts = 0;
    while let Ok(Some(chunk)) = tokio::time::timeout_at(deadline.into(), body.next()).await {
        parser.push(&chunk.unwrap());
        while let Ok(Some(_)) = parser.next_part() {
            parts += 1;
        }
    }
    assert!((9..=11).contains(&parts), "{parts} parts in 1 s");
}

#[tokio::test]
async fn independent_stream_cursors() {
    let payloads = vec![fake_jpeg(b"1"), fake_jpeg(b"2"), fake_jpeg(b"3")];
    let (addr, _h) = spawn_camsim(set(payloads.clone(), true, 5), "drishtiframe").await;
    let first_n = |n: usize| {
        let url = format!("http://{addr}/stream");
        async move {
            let mut body = get(url).await.bytes_stream();
            let mut parser = MultipartParser::new("drishtiframe");
            let mut got = Vec::new();
            while got.len() < n {
                parser.push(&body.next().await.unwrap().unwrap());
                while let Ok(Some(p)) = parser.next_part() {
                    got.push(p);
                }
            }
            got.truncate(n);
            got
        }
    };
    let (x, y) = tokio::join!(first_n(4), first_n(4));
    let expected = vec![
        payloads[0].clone(),
        payloads[1].clone(),
        payloads[2].clone(),
        payloads[0].clone(),
    ];
    assert_eq!(x, expected);
    assert_eq!(y, expected);
}

fn count(haystack: &[u8], needle: &[u8]) -> usize {
    haystack
        .windows(needle.len())
        .filter(|w| *w == needle)
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn emission_order_and_boundary_count(n in 1usize..=100, seed in any::<u64>()) {
        let payloads: Vec<Bytes> = (0..n)
            .map(|i| fake_jpeg(format!("{seed:x}-{i}").as_bytes()))
            .collect();
        let rt = tokio::runtime::Runtime::new().unwrap();
        let body = rt.block_on(async {
            let (addr, _h) = spawn_camsim(set(payloads.clone(), false, 1), "drishtiframe").await;
            get(format!("http://{addr}/stream")).await.bytes().await.unwrap()
        });
        prop_assert_eq!(count(&body, b"\r\n--drishtiframe\r\n"), n);
        prop_assert_eq!(count(&body, b"\r\n--drishtiframe--\r\n"), 1);
        prop_assert!(body.ends_with(b"\r\n--drishtiframe--\r\n"));
        let out = parse_multipart([body], "drishtiframe");
        prop_assert!(out.error.is_none());
        prop_assert_eq!(out.parts, payloads);
    }
}
