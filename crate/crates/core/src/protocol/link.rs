use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{ack_status, AckFrame, TelemetryFrame};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("command 0x{cmd:02X} unacknowledged after {attempts} attempts")]
    Unacknowledged { cmd: u8, attempts: u32 },
    #[error("command 0x{cmd:02X} rejected by the device (status 0x{status:02X})")]
    Rejected { cmd: u8, status: u8 },
    #[error("command frames must go through request(), not transmit()")]
    CommandNeedsAck,
    #[error("invalid link parameters: {0}")]
    InvalidParams(String),
}

/// Channel model between node and host.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    /// Loss probability per notification (data/status frame).
    pub drop_prob: f64,
    pub latency_ms: u64,
    /// Extra delay drawn uniformly from `0..=jitter_ms`.
    pub jitter_ms: u64,
    pub seed: u64,
    /// Loss probability per command or ack transmission. May be 1 to force
    /// the link-failure path.
    pub command_drop_prob: f64,
    pub ack_timeout_ms: u64,
    pub max_retries: u32,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            drop_prob: 0.0,
            latency_ms: 15,
            jitter_ms: 0,
            seed: 1,
            command_drop_prob: 0.0,
            ack_timeout_ms: 200,
            max_retries: 3,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(LinkError::InvalidParams(format!(
                "drop_prob {} outside [0, 1)",
                self.drop_prob
            )));
        }
        if !(0.0..=1.0).contains(&self.command_drop_prob) {
            return Err(LinkError::InvalidParams(format!(
                "command_drop_prob {} outside [0, 1]",
                self.command_drop_prob
            )));
        }
        if self.ack_timeout_ms == 0 {
            return Err(LinkError::InvalidParams("ack timeout must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery<P> {
    pub payload: P,
    pub deliver_at_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommandOutcome {
    pub ack: AckFrame,
    pub attempts: u32,
    /// Host time at which the ack arrived.
    pub completed_at_ms: u64,
}

/// Seeded lossy channel.
///
/// Notifications are fire-and-forget like BLE notifications. Commands are
/// retried until acknowledged, up to `max_retries` retries with
/// `ack_timeout_ms` between attempts.
#[derive(Debug, Clone)]
pub struct LossyLink {
    params: LinkParams,
    rng: ChaCha8Rng,
}

impl LossyLink {
    pub fn new(params: LinkParams) -> Result<Self, LinkError> {
        params.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Ok(Self { params, rng })
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    fn delay(&mut self) -> u64 {
        let jitter = if self.params.jitter_ms > 0 {
            self.rng.random_range(0..=self.params.jitter_ms)
        } else {
            0
        };
        self.params.latency_ms + jitter
    }

    fn lost(&mut self, p: f64) -> bool {
        // draw even at p = 0 so the random stream does not depend on p
        let u: f64 = self.rng.random();
        u < p
    }

    /// Send an unacknowledged payload. `None` means it was dropped.
    pub fn transmit<P>(&mut self, payload: P, t_now_ms: u64) -> Option<Delivery<P>> {
        if self.lost(self.params.drop_prob) {
            return None;
        }
        Some(Delivery {
            payload,
            deliver_at_ms: t_now_ms + self.delay(),
        })
    }

    /// Send a command and wait for its ack.
    ///
    /// `responder` plays the device: it receives the command with its arrival
    /// time and returns the reply, if any. A retried command may reach the
    /// device more than once when only the ack was lost, so handlers must be
    /// idempotent.
    pub fn request<F>(
        &mut self,
        cmd: &TelemetryFrame,
        t_now_ms: u64,
        mut responder: F,
    ) -> Result<CommandOutcome, LinkError>
    where
        F: FnMut(&TelemetryFrame, u64) -> Option<TelemetryFrame>,
    {
        let cmd_type = cmd.frame_type() as u8;
        let attempts = 1 + self.params.max_retries;
        let timeout = self.params.ack_timeout_ms;
        let p = self.params.command_drop_prob;
        for attempt in 0..attempts {
            let sent_at = t_now_ms + u64::from(attempt) * timeout;
            if self.lost(p) {
                continue;
            }
            let arrives = sent_at + self.delay();
            let reply = responder(cmd, arrives);
            if self.lost(p) {
                continue;
            }
            let ack_at = arrives + self.delay();
            if ack_at - sent_at > timeout {
                continue;
            }
            match reply {
                Some(TelemetryFrame::Ack(ack)) if ack.cmd == cmd_type => {
                    if ack.status != ack_status::OK {
                        return Err(LinkError::Rejected {
                            cmd: cmd_type,
                            status: ack.status,
                        });
                    }
                    return Ok(CommandOutcome {
                        ack,
                        attempts: attempt + 1,
                        completed_at_ms: ack_at,
                    });
                }
                _ => continue,
            }
        }
        Err(LinkError::Unacknowledged {
            cmd: cmd_type,
            attempts,
        })
    }
}

/// Send a telemetry frame over the link.
///
/// Data and status frames are dropped with `drop_prob`; commands are refused
/// because they need the acknowledged path ([`LossyLink::request`]).
pub fn link_transmit(
    link: &mut LossyLink,
    frame: TelemetryFrame,
    t_now_ms: u64,
) -> Result<Option<Delivery<TelemetryFrame>>, LinkError> {
    if frame.is_command() {
        return Err(LinkError::CommandNeedsAck);
    }
    Ok(link.transmit(frame, t_now_ms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::frame::DataFrame;

    fn data(seq: u16) -> TelemetryFrame {
        TelemetryFrame::Data(DataFrame {
            seq,
            t_ms: 0,
            ph_raw: 0,
            temp_raw: 0,
        })
    }

    fn acker(cmd: &TelemetryFrame, _t: u64) -> Option<TelemetryFrame> {
        Some(TelemetryFrame::Ack(AckFrame {
            cmd: cmd.frame_type() as u8,
            status: ack_status::OK,
        }))
    }

    #[test]
    fn lossless_link_delivers_in_order() {
        let mut link = LossyLink::new(LinkParams::default()).unwrap();
        let mut last = 0;
        for i in 0..1000u16 {
            let d = link_transmit(&mut link, data(i), u64::from(i) * 100)
                .unwrap()
                .unwrap();
            assert_eq!(d.payload, data(i));
            assert_eq!(d.deliver_at_ms, u64::from(i) * 100 + 15);
            assert!(d.deliver_at_ms >= last);
            last = d.deliver_at_ms;
        }
    }

    #[test]
    fn ten_percent_loss() {
        let mut link = LossyLink::new(LinkParams {
            drop_prob: 0.1,
            seed: 7,
            ..LinkParams::default()
        })
        .unwrap();
        let delivered = (0..10_000u64)
            .filter(|&i| link.transmit(i, i * 100).is_some())
            .count();
        // binomial(10000, 0.9): mean 9000, sd 30
        assert!((8820..=9180).contains(&delivered), "{delivered}");
        assert_eq!(delivered, 8991);
    }

    #[test]
    fn jitter_stays_in_bounds() {
        let mut link = LossyLink::new(LinkParams {
            latency_ms: 10,
            jitter_ms: 30,
            ..LinkParams::default()
        })
        .unwrap();
        let delays: Vec<u64> = (0..2000)
            .map(|_| link.transmit((), 0).unwrap().deliver_at_ms)
            .collect();
        assert!(delays.iter().all(|d| (10..=40).contains(d)));
        assert!(delays.contains(&10) && delays.contains(&40));
    }

    #[test]
    fn commands_refuse_the_unacknowledged_path() {
        let mut link = LossyLink::new(LinkParams::default()).unwrap();
        assert_eq!(
            link_transmit(&mut link, TelemetryFrame::CmdStart, 0),
            Err(LinkError::CommandNeedsAck)
        );
    }

    #[test]
    fn healthy_command_is_acked_first_try() {
        let mut link = LossyLink::new(LinkParams::default()).unwrap();
        let out = link
            .request(&TelemetryFrame::CmdStart, 1000, acker)
            .unwrap();
        assert_eq!(out.attempts, 1);
        assert_eq!(out.completed_at_ms, 1030);
        assert_eq!(out.ack.cmd, 0x10);
    }

    #[test]
    fn total_command_loss_fails_after_three_retries() {
        let mut link = LossyLink::new(LinkParams {
            command_drop_prob: 1.0,
            ..LinkParams::default()
        })
        .unwrap();
        let mut seen = 0;
        let err = link
            .request(
                &TelemetryFrame::CmdConfig(crate::protocol::ConfigFrame {
                    sample_hz: 100,
                    avg_n: 10,
                    ma_window: 5,
                }),
                0,
                |c, t| {
                    seen += 1;
                    acker(c, t)
                },
            )
            .unwrap_err();
        assert_eq!(
            err,
            LinkError::Unacknowledged {
                cmd: 0x12,
                attempts: 4
            }
        );
        assert_eq!(seen, 0);
    }

    #[test]
    fn slow_acks_time_out() {
        let mut link = LossyLink::new(LinkParams {
            latency_ms: 150,
            ..LinkParams::default()
        })
        .unwrap();
        let err = link
            .request(&TelemetryFrame::CmdStop, 0, acker)
            .unwrap_err();
        assert!(matches!(err, LinkError::Unacknowledged { attempts: 4, .. }));
    }

    #[test]
    fn lossy_commands_eventually_succeed() {
        let mut link = LossyLink::new(LinkParams {
            command_drop_prob: 0.5,
            seed: 3,
            ..LinkParams::default()
        })
        .unwrap();
        let mut ok = 0;
        for i in 0..200 {
            if link
                .request(&TelemetryFrame::CmdStart, i * 1000, acker)
                .is_ok()
            {
                ok += 1;
            }
        }
        // per attempt success 0.25; four attempts: 1 − 0.75⁴ ≈ 0.68
        assert!((110..=160).contains(&ok), "{ok}");
    }

    #[test]
    fn rejection_is_surfaced() {
        let mut link = LossyLink::new(LinkParams::default()).unwrap();
        let err = link
            .request(&TelemetryFrame::CmdStart, 0, |_, _| {
                Some(TelemetryFrame::Ack(AckFrame {
                    cmd: 0x10,
                    status: ack_status::REJECTED,
                }))
            })
            .unwrap_err();
        assert_eq!(
            err,
            LinkError::Rejected {
                cmd: 0x10,
                status: 1
            }
        );
    }

    #[test]
    fn drop_prob_bounds() {
        for p in [-0.1, 1.0, 1.5] {
            assert!(LossyLink::new(LinkParams {
                drop_prob: p,
                ..LinkParams::default()
            })
            .is_err());
        }
    }
}
