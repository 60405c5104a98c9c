use phtel::protocol::{
    decode, encode, link_transmit, AckFrame, ConfigFrame, DataFrame, DiagnosticKind, FrameDecoder,
    LinkParams, LossyLink, StatusFrame, TelemetryFrame,
};
use proptest::prelude::*;

fn frame() -> impl Strategy<Value = TelemetryFrame> {
    prop_oneof![
        (any::<u16>(), any::<u32>(), 0u16..=4095, 0u16..=4095).prop_map(
            |(seq, t_ms, ph_raw, temp_raw)| {
                TelemetryFrame::Data(DataFrame {
                    seq,
                    t_ms,
                    ph_raw,
                    temp_raw,
                })
            }
        ),
        (any::<u16>(), any::<u8>()).prop_map(|(battery_mv, flags)| TelemetryFrame::Status(
            StatusFrame { battery_mv, flags }
        )),
        Just(TelemetryFrame::CmdStart),
        Just(TelemetryFrame::CmdStop),
        (any::<u16>(), any::<u8>(), any::<u8>()).prop_map(|(sample_hz, avg_n, ma_window)| {
            TelemetryFrame::CmdConfig(ConfigFrame {
                sample_hz,
                avg_n,
                ma_window,
            })
        }),
        (any::<u8>(), any::<u8>())
            .prop_map(|(cmd, status)| TelemetryFrame::Ack(AckFrame { cmd, status })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn streams_round_trip(frames in proptest::collection::vec(frame(), 0..40)) {
        let bytes: Vec<u8> = frames.iter().flat_map(encode).collect();
        let d = decode(&bytes);
        prop_assert_eq!(d.frames, frames);
        prop_assert!(d.diagnostics.is_empty());
    }

    #[test]
    fn any_chunking_decodes_the_same(frames in proptest::collection::vec(frame(), 1..20),
                                     cuts in proptest::collection::vec(1usize..9, 1..50)) {
        let bytes: Vec<u8> = frames.iter().flat_map(encode).collect();
        let mut dec = FrameDecoder::new();
        let mut got = Vec::new();
        let mut rest = &bytes[..];
        for c in cuts.iter().cycle() {
            if rest.is_empty() {
                break;
            }
            let (head, tail) = rest.split_at((*c).min(rest.len()));
            got.extend(dec.push(head));
            rest = tail;
        }
        got.extend(dec.finish());
        let frames_out: Vec<_> = got
            .into_iter()
            .filter_map(|e| match e {
                phtel::protocol::DecodeEvent::Frame(f) => Some(f),
                phtel::protocol::DecodeEvent::Diagnostic(_) => None,
            })
            .collect();
        prop_assert_eq!(frames_out, frames);
    }

    /// Corrupting one frame in a stream loses at most that frame and never
    /// invents one.
    #[test]
    fn corruption_is_contained(frames in proptest::collection::vec(frame(), 3..12),
                               victim in 0usize..3, byte in 0usize..16, bit in 0u8..8) {
        let encoded: Vec<Vec<u8>> = frames.iter().map(encode).collect();
        let victim = victim.min(frames.len() - 1);
        let mut stream = Vec::new();
        for (i, e) in encoded.iter().enumerate() {
            let mut e = e.clone();
            if i == victim {
                let b = byte % e.len();
                e[b] ^= 1 << bit;
            }
            stream.extend(e);
        }
        let d = decode(&stream);
        let survivors: Vec<_> = frames.iter().enumerate().filter(|(i, _)| *i != victim).map(|(_, f)| *f).collect();
        prop_assert!(!d.diagnostics.is_empty());
        // every decoded frame is one of the originals, in order
        let mut it = frames.iter();
        for f in &d.frames {
            prop_assert!(it.any(|g| g == f));
        }
        for f in &survivors {
            prop_assert!(d.frames.contains(f));
        }
    }

    #[test]
    fn lossy_link_keeps_order(seed in any::<u64>(), p in 0.0f64..0.9) {
        let mut link = LossyLink::new(LinkParams { drop_prob: p, seed, ..LinkParams::default() }).unwrap();
        let mut last = None;
        for seq in 1..=500u16 {
            let f = TelemetryFrame::Data(DataFrame { seq, t_ms: u32::from(seq) * 100, ph_raw: 0, temp_raw: 0 });
            if let Some(d) = link_transmit(&mut link, f, u64::from(seq) * 100).unwrap() {
                let TelemetryFrame::Data(df) = d.payload else { unreachable!() };
                prop_assert!(last.is_none_or(|l| df.seq > l));
                last = Some(df.seq);
            }
        }
    }
}

#[test]
fn data_frame_wire_layout() {
    let f = TelemetryFrame::Data(DataFrame {
        seq: 1,
        t_ms: 100,
        ph_raw: 2048,
        temp_raw: 2099,
    });
    let b = encode(&f);
    assert_eq!(&b[..4], &[0xA5, 0x01, 0x01, 0x0A]);
    assert_eq!(
        &b[4..14],
        &[0x01, 0x00, 0x64, 0x00, 0x00, 0x00, 0x00, 0x08, 0x33, 0x08]
    );
    assert_eq!(b.len(), 16);
}

#[test]
fn garbage_only_stream() {
    let d = decode(&[0x00, 0x11, 0x22]);
    assert!(d.frames.is_empty());
    assert_eq!(d.diagnostics.len(), 1);
    assert_eq!(d.diagnostics[0].kind, DiagnosticKind::Garbage);
}
