/**
 * Wire protocol of the game service: JSON text frames over a WebSocket.
 * Field names and types here mirror the server schema exactly; both
 * directions are validated before use.
 */
import { z } from "zod";

export const GAMES = ["arm_game", "quadrotor_game"] as const;
export type GameName = (typeof GAMES)[number];

export const StartMessage = z
  .object({
    type: z.literal("start"),
    game: z.enum(GAMES),
    seed: z.number().int().optional(),
  })
  .strict();

export const KeyMessage = z
  .object({
    type: z.literal("key"),
    keys: z.array(z.string()),
    t: z.number().int().nonnegative(),
  })
  .strict();

export const ConfirmMessage = z.object({ type: z.literal("confirm") }).strict();
export const ResetMessage = z.object({ type: z.literal("reset") }).strict();

export const ClientMessage = z.discriminatedUnion("type", [
  StartMessage,
  KeyMessage,
  ConfirmMessage,
  ResetMessage,
]);
export type ClientMessage = z.infer<typeof ClientMessage>;

export const PlanMessage = z
  .object({
    type: z.literal("plan"),
    k: z.number().int().positive(),
    theta: z.array(z.number()),
  })
  .strict();

export const FrameMessage = z
  .object({
    type: z.literal("frame"),
    t: z.number().int().nonnegative(),
    state: z.array(z.number()),
  })
  .strict();

export const IterationDoneMessage = z
  .object({
    type: z.literal("iteration_done"),
    k: z.number().int().positive(),
    cuts: z.number().int().nonnegative(),
  })
  .strict();

export const DoneMessage = z
  .object({
    type: z.literal("done"),
    reason: z.string(),
    theta: z.array(z.number()),
  })
  .strict();

export const ErrorMessage = z
  .object({ type: z.literal("error"), message: z.string() })
  .strict();

export const ServerMessage = z.discriminatedUnion("type", [
  PlanMessage,
  FrameMessage,
  IterationDoneMessage,
  DoneMessage,
  ErrorMessage,
]);
export type ServerMessage = z.infer<typeof ServerMessage>;

/** Parse an incoming text frame; null when malformed (caller logs + skips). */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  const result = ServerMessage.safeParse(data);
  return result.success ? result.data : null;
}

/** Validate an outgoing message; throws when it violates the protocol. */
export function encodeClientMessage(message: ClientMessage): string {
  return JSON.stringify(ClientMessage.parse(message));
}
