// mdbook cannot test listings that depend on workspace crates, so each
// chapter is pulled in as the doc comment of an empty module and `cargo test
// --doc` runs the listings. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/device.md")]
pub mod device {}
#[doc = include_str!("../../../book/src/firmware.md")]
pub mod firmware {}
#[doc = include_str!("../../../book/src/protocol.md")]
pub mod protocol {}
#[doc = include_str!("../../../book/src/recording.md")]
pub mod recording {}
#[doc = include_str!("../../../book/src/analysis.md")]
pub mod analysis {}
#[doc = include_str!("../../../book/src/power.md")]
pub mod power {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
