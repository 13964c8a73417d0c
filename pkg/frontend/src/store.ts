// Console view state: a pure reducer over daemon events plus an initial
// snapshot. The console fabricates no state of its own; everything here
// mirrors what the gateway reported.

import type {
  ApiEvent,
  ConnectionState,
  DaemonState,
  LightState,
  ObjectSummary,
  TranscriptEntry,
} from "./api.js";

export interface InnerEntry {
  text: string;
  intent: number;
}

export interface ConsoleState {
  phase: string;
  connection: ConnectionState;
  object: ObjectSummary | null;
  transcript: TranscriptEntry[];
  inner: InnerEntry[];
  light: LightState;
  awaitingTurn: boolean;
}

export function initialState(): ConsoleState {
  return {
    phase: "idle",
    connection: "connecting",
    object: null,
    transcript: [],
    inner: [],
    light: { mode: "off", b_min: 0.15, b_max: 0.9, period_s: 4 },
    awaitingTurn: false,
  };
}

export function fromSnapshot(snapshot: DaemonState): ConsoleState {
  return {
    ...initialState(),
    phase: snapshot.phase,
    light: snapshot.light,
    object: snapshot.object ?? null,
    transcript: snapshot.transcript ? [...snapshot.transcript] : [],
  };
}

export function applyEvent(state: ConsoleState, event: ApiEvent): ConsoleState {
  switch (event.kind) {
    case "PhaseChanged": {
      const phase = event.payload.phase as string;
      if (phase === "request") {
        // a new session begins: previous session's view data is stale
        return { ...state, phase, object: null, transcript: [], inner: [] };
      }
      return { ...state, phase };
    }
    case "ObjectBound":
      return {
        ...state,
        object: {
          object_id: event.payload.object_id as string,
          name: event.payload.name as string,
          description: event.payload.description as string,
          traits: (event.payload.traits as string[]) ?? [],
        },
      };
    case "TranscriptAppended":
      return {
        ...state,
        transcript: [...state.transcript, event.payload as unknown as TranscriptEntry],
      };
    case "InnerThoughts":
      return {
        ...state,
        inner: [
          ...state.inner,
          { text: event.payload.text as string, intent: event.payload.intent as number },
        ],
      };
    case "LightSample":
      return {
        ...state,
        light: {
          mode: event.payload.mode as string,
          b_min: event.payload.b_min as number,
          b_max: event.payload.b_max as number,
          period_s: event.payload.period_s as number,
        },
      };
    case "SessionClosed":
      return { ...state, awaitingTurn: false };
    default:
      return state;
  }
}

export function setConnection(state: ConsoleState, connection: ConnectionState): ConsoleState {
  return { ...state, connection };
}

export function setAwaitingTurn(state: ConsoleState, awaiting: boolean): ConsoleState {
  return { ...state, awaitingTurn: awaiting };
}

// brightness of the light preview at t seconds into the current pattern
export function lightBrightness(light: LightState, t: number): number {
  if (light.mode === "off") return 0;
  if (light.mode === "steady_bright") return light.b_max;
  const phase = (1 - Math.cos((2 * Math.PI * t) / light.period_s)) / 2;
  return light.b_min + (light.b_max - light.b_min) * phase;
}
