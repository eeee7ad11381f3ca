/** One regenerate request in flight at a time; rapid edits coalesce so
 * only the latest grid state is sent when the current request finishes. */

export class CoalescingQueue<T> {
  private running = false;
  private pending: (() => Promise<T>) | null = null;

  constructor(private readonly onError: (err: unknown) => void = () => {}) {}

  submit(task: () => Promise<T>): void {
    if (this.running) {
      this.pending = task;
      return;
    }
    this.running = true;
    void this.drain(task);
  }

  get busy(): boolean {
    return this.running;
  }

  private async drain(task: () => Promise<T>): Promise<void> {
    let current: (() => Promise<T>) | null = task;
    while (current) {
      try {
        await current();
      } catch (err) {
        this.onError(err);
      }
      current = this.pending;
      this.pending = null;
    }
    this.running = false;
  }
}
