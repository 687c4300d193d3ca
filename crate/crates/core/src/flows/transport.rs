//! How an end entity reaches an authority: directly, or tunnelled through
//! the GBA-AS over an authenticated channel.

use rand::Rng;

use super::actors::{Authority, EndEntity, FlowContext};
use super::bus::MessageBus;
use super::channel::{
    ChannelSide, GBA_AUTH_REQUEST, GBA_AUTH_RESPONSE, GBA_CHALLENGE, SecureChannel, gba_response, gba_session_key,
};
use super::{FlowError, Role};
use crate::codec::{Reader, Writer};

pub(crate) enum Link<'a> {
    Direct,
    /// Relayed by the GBA-AS: EE ⇄ AS as channel frames, AS ⇄ authority in the clear.
    Gba(&'a mut Authority),
}

impl Link<'_> {
    pub(crate) fn up(
        &mut self,
        ee: &mut EndEntity,
        to: &str,
        bytes: Vec<u8>,
        bus: &mut MessageBus,
    ) -> Result<Vec<u8>, FlowError> {
        match self {
            Link::Direct => Ok(bus.deliver(&ee.actor_name(), to, bytes)),
            Link::Gba(gba) => {
                let frame = ee.channel.as_mut().ok_or(FlowError::NoChannel)?.seal(&bytes);
                let frame = bus.deliver(&ee.actor_name(), gba.name(), frame);
                let channel = gba.channels.get_mut(&ee.name).ok_or(FlowError::NoChannel)?;
                let inner = channel.open(&frame)?;
                Ok(bus.deliver(gba.name(), to, inner))
            }
        }
    }

    pub(crate) fn down(
        &mut self,
        ee: &mut EndEntity,
        from: &str,
        bytes: Vec<u8>,
        bus: &mut MessageBus,
    ) -> Result<Vec<u8>, FlowError> {
        match self {
            Link::Direct => Ok(bus.deliver(from, &ee.actor_name(), bytes)),
            Link::Gba(gba) => {
                let inner = bus.deliver(from, gba.name(), bytes);
                let channel = gba.channels.get_mut(&ee.name).ok_or(FlowError::NoChannel)?;
                let frame = channel.seal(&inner);
                let frame = bus.deliver(gba.name(), &ee.actor_name(), frame);
                Ok(ee.channel.as_mut().ok_or(FlowError::NoChannel)?.open(&frame)?)
            }
        }
    }
}

/// Runs the three-message GBA bootstrap and installs both channel ends.
pub fn establish_gba_channel(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    gba: &mut Authority,
    bus: &mut MessageBus,
) -> Result<(), FlowError> {
    if gba.role != Role::GbaAs {
        return Err(FlowError::UnexpectedMessage("authority is not a GBA-AS"));
    }
    let secret = ee.subscriber_secret.ok_or(FlowError::UnknownSubscriber)?;
    let ee_name = ee.actor_name();

    let mut w = Writer::new();
    w.u8(GBA_AUTH_REQUEST).var(ee.name.as_bytes());
    let request = bus.deliver(&ee_name, gba.name(), w.into_bytes());
    let subscriber = {
        let mut r = Reader::new(&request);
        if r.u8()? != GBA_AUTH_REQUEST {
            return Err(FlowError::UnexpectedMessage("expected GBA auth request"));
        }
        let name = String::from_utf8(r.var()?.to_vec()).map_err(|_| FlowError::UnknownSubscriber)?;
        r.finish()?;
        name
    };
    let stored = *gba.subscriber_secrets.get(&subscriber).ok_or(FlowError::UnknownSubscriber)?;
    let mut challenge = [0u8; 16];
    gba.rng.fill_bytes(&mut challenge);
    gba.challenges.insert(subscriber.clone(), challenge);

    let mut w = Writer::new();
    w.u8(GBA_CHALLENGE).raw(&challenge);
    let delivered = bus.deliver(gba.name(), &ee_name, w.into_bytes());
    let received: [u8; 16] = {
        let mut r = Reader::new(&delivered);
        if r.u8()? != GBA_CHALLENGE {
            return Err(FlowError::UnexpectedMessage("expected GBA challenge"));
        }
        let c = r.array()?;
        r.finish()?;
        c
    };

    let mut w = Writer::new();
    w.u8(GBA_AUTH_RESPONSE).raw(&gba_response(ctx.profile, &secret, &received));
    let response = bus.deliver(&ee_name, gba.name(), w.into_bytes());
    let challenge = gba.challenges.remove(&subscriber).ok_or(FlowError::BadAuthResponse)?;
    let ok = {
        let mut r = Reader::new(&response);
        r.u8()? == GBA_AUTH_RESPONSE && r.array::<32>()? == gba_response(ctx.profile, &stored, &challenge) && r.finish().is_ok()
    };
    if !ok {
        return Err(FlowError::BadAuthResponse);
    }
    gba.channels.insert(
        subscriber,
        SecureChannel::new(ctx.profile, gba_session_key(ctx.profile, &stored, &challenge), ChannelSide::Network),
    );
    // The device keys its end from the challenge it saw; a tampered challenge
    // would already have failed the response check above.
    ee.channel = Some(SecureChannel::new(ctx.profile, gba_session_key(ctx.profile, &secret, &received), ChannelSide::Device));
    Ok(())
}
