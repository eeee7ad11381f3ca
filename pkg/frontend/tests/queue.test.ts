import { describe, expect, it } from "vitest";

import { CoalescingQueue } from "../src/queue";

function deferred(): { promise: Promise<void>; resolve: () => void } {
  let resolve!: () => void;
  const promise = new Promise<void>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

const tick = () => new Promise((r) => setTimeout(r, 0));

describe("CoalescingQueue", () => {
  it("runs one task at a time and coalesces to the latest", async () => {
    const queue = new CoalescingQueue<void>();
    const first = deferred();
    const runs: string[] = [];

    queue.submit(async () => {
      runs.push("first");
      await first.promise;
    });
    queue.submit(async () => {
      runs.push("second");
    });
    queue.submit(async () => {
      runs.push("third");
    });

    await tick();
    expect(runs).toEqual(["first"]); // later submissions wait
    expect(queue.busy).toBe(true);

    first.resolve();
    await tick();
    await tick();
    // "second" was superseded by "third" while "first" was in flight
    expect(runs).toEqual(["first", "third"]);
    expect(queue.busy).toBe(false);
  });

  it("reports task errors and keeps draining", async () => {
    const errors: unknown[] = [];
    const queue = new CoalescingQueue<void>((e) => errors.push(e));
    queue.submit(async () => {
      throw new Error("boom");
    });
    await tick();
    expect(errors).toHaveLength(1);
    queue.submit(async () => {});
    await tick();
    expect(queue.busy).toBe(false);
  });
});
