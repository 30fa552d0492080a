//! `--set key=value` handling. Keys name fields of the controller or channel
//! configuration; the patched configuration is validated again afterwards.

use anyhow::{anyhow, bail, Result};
use serde_json::Value;
use vigil_core::channel::ChannelConfig;
use vigil_core::ControllerConfig;

pub fn apply(
    sets: &[String],
    controller: &mut ControllerConfig,
    channel: &mut ChannelConfig,
) -> Result<()> {
    let mut c = serde_json::to_value(&*controller)?;
    let mut ch = serde_json::to_value(&*channel)?;
    for s in sets {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{s}`"))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value: Value =
            serde_json::from_str(raw).map_err(|_| anyhow!("`{key}`: `{raw}` is not a number"))?;
        if !value.is_number() {
            bail!("`{key}`: `{raw}` is not a number");
        }
        let target = if c.get(key).is_some() {
            &mut c
        } else if ch.get(key).is_some() {
            &mut ch
        } else {
            bail!("unknown setting `{key}`");
        };
        target[key] = value;
    }
    *controller = serde_json::from_value(c).map_err(|e| anyhow!("controller setting: {e}"))?;
    *channel = serde_json::from_value(ch).map_err(|e| anyhow!("channel setting: {e}"))?;
    controller.validate()?;
    channel.validate()?;
    Ok(())
}
