// Payload shapes mirrored from the service's JSON responses. The client
// renders these verbatim and never computes chart values on its own.
export {};
