export * from "./protocol.js";
export * from "./orbit.js";
export * from "./tf.js";
export * from "./coalesce.js";
export * from "./dashboard.js";
export * from "./client.js";
export * from "./viewer.js";
