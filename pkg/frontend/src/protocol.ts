/**
 * Wire protocol spoken with the teleoperation bridge over a WebSocket.
 *
 * All messages are JSON text frames with a `type` discriminator:
 *   server -> client: hello, state, end, error
 *   client -> server: start, cmd, end
 */
import { z } from "zod";

/** Protocol revision this console understands (major.minor). */
export const SCHEMA_VERSION = "1.0";

export const CommandFrameSchema = z.object({
  type: z.literal("cmd"),
  t: z.number(),
  buttons: z.array(z.number().int().min(0).max(1)),
  axes: z.array(z.number().min(-1).max(1)),
});
export type CommandFrameMsg = z.infer<typeof CommandFrameSchema>;

export const ArenaInfoSchema = z.object({
  id: z.string(),
  resolution: z.number().positive(),
  origin: z.tuple([z.number(), z.number()]),
  shape: z.tuple([z.number().int(), z.number().int()]),
  sectors: z.array(z.tuple([z.number(), z.number()])),
});
export type ArenaInfo = z.infer<typeof ArenaInfoSchema>;

export const HelloSchema = z.object({
  type: z.literal("hello"),
  schema_version: z.string(),
  policies: z.array(z.string()).nonempty(),
  arenas: z.array(ArenaInfoSchema).nonempty(),
  heightmap: z.array(z.array(z.number())),
});
export type HelloMsg = z.infer<typeof HelloSchema>;

export const StateSchema = z.object({
  type: z.literal("state"),
  t: z.number(),
  x: z.number(),
  y: z.number(),
  z: z.number(),
  yaw: z.number(),
  pitch: z.number(),
  roll: z.number(),
  theta: z.tuple([z.number(), z.number(), z.number(), z.number()]),
  d: z.number(),
  accel: z.tuple([z.number(), z.number(), z.number()]),
  ground_speed: z.number(),
  mode: z.string().nullable(),
  stuck: z.boolean(),
});
export type StateMsg = z.infer<typeof StateSchema>;

export const EndSchema = z.object({
  type: z.literal("end"),
  status: z.string(),
  reason: z.string(),
  log: z.string(),
  cl: z.number(),
});
export type EndMsg = z.infer<typeof EndSchema>;

export const ErrorSchema = z.object({
  type: z.literal("error"),
  code: z.string(),
  message: z.string(),
});
export type ErrorMsg = z.infer<typeof ErrorSchema>;

export const ServerMessageSchema = z.discriminatedUnion("type", [
  HelloSchema,
  StateSchema,
  EndSchema,
  ErrorSchema,
]);
export type ServerMessage = z.infer<typeof ServerMessageSchema>;

export interface StartMsg {
  type: "start";
  method: string;
  arena?: string;
}

/** True when the server's protocol revision is usable by this console
 *  (same major version; minor revisions are additive). */
export function schemaCompatible(server: string): boolean {
  const major = (v: string) => v.split(".")[0];
  return major(server) === major(SCHEMA_VERSION);
}

export function parseServerMessage(text: string): ServerMessage {
  return ServerMessageSchema.parse(JSON.parse(text));
}
