// Bootstraps the console against a running daemon. State is reconstructed
// on every load by replaying the channel's event history from sequence 0,
// so a reload mid-conversation lands back in the same view.

import { Channel, EventStream, PortalClient } from "./api.js";
import { applyEvent, ConsoleState, fromSnapshot, setAwaitingTurn, setConnection } from "./store.js";
import { buildShell, render, renderMemories, ViewActions } from "./view.js";

export interface AppOptions {
  baseUrl: string;
  channel: Channel;
  token?: string;
}

export interface App {
  client: PortalClient;
  stream: EventStream;
  getState: () => ConsoleState;
  stop: () => void;
}

export async function startApp(root: HTMLElement, opts: AppOptions): Promise<App> {
  const client = new PortalClient(opts);
  // take only phase and light from the snapshot; session data (transcript,
  // object, inner thoughts) is rebuilt by the event replay below so a page
  // reload mid-conversation converges to the same view
  const snapshot = fromSnapshot(await client.getState());
  let state: ConsoleState = { ...snapshot, transcript: [], object: null, inner: [] };

  const update = (next: ConsoleState) => {
    state = next;
    render(root, state);
  };

  const actions: ViewActions = {
    onAwaken: (imageRef) => {
      void client.awaken(imageRef).catch((err) => console.error(err));
    },
    onSend: (text) => {
      update(setAwaitingTurn(state, true));
      void client
        .utterance(text)
        .catch((err) => console.error(err))
        .finally(() => update(setAwaitingTurn(state, false)));
    },
    onGoodbye: () => {
      void client.goodbye().catch((err) => console.error(err));
    },
    onMemoryLookup: (mode, query) => {
      const objectId = state.object?.object_id;
      if (!objectId) return;
      void client
        .getMemories(objectId, mode, query)
        .then((items) => renderMemories(root, items))
        .catch((err) => console.error(err));
    },
  };

  buildShell(root, opts.channel, actions);
  render(root, state);

  // Replay from 0 instead of trusting the snapshot's transcript: the event
  // log is the single source of truth and also carries inner thoughts on
  // the operator channel.
  const stream = new EventStream(opts, {
    onEvent: (ev) => update(applyEvent(state, ev)),
    onConnection: (conn) => update(setConnection(state, conn)),
  });
  stream.start(0);

  return {
    client,
    stream,
    getState: () => state,
    stop: () => stream.stop(),
  };
}
