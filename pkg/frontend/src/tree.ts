/** Tree-explorer model: walk state, re-rooting with a back stack, BFS
 * layout, and the rendered-node cap. Pure logic; rendering lives in the
 * console layer.
 */

import type { TreeNode, WalkParamsInput, WalkResponse, WalkStart } from "./types.js";

export const RENDER_CAP = 200;

export type WalkFn = (start: WalkStart, params: WalkParamsInput) => Promise<WalkResponse>;

export interface LayoutNode {
  docId: string | null;
  depth: number;
  /** Index of the parent in the flattened node list; -1 for the root. */
  parent: number;
}

export class TreeExplorer {
  readonly params: WalkParamsInput;
  private readonly walkFn: WalkFn;
  private currentStart: WalkStart | null = null;
  private readonly backStack: WalkStart[] = [];
  private tree: TreeNode | null = null;
  /** Walk requests run one at a time; later calls queue behind earlier ones. */
  private queue: Promise<unknown> = Promise.resolve();

  constructor(walkFn: WalkFn, params: WalkParamsInput) {
    this.walkFn = walkFn;
    this.params = params;
  }

  private enqueue<T>(task: () => Promise<T>): Promise<T> {
    const next = this.queue.then(task, task);
    this.queue = next.catch(() => undefined);
    return next;
  }

  walkFrom(start: WalkStart): Promise<TreeNode> {
    return this.enqueue(async () => {
      const resp = await this.walkFn(start, this.params);
      this.currentStart = start;
      this.backStack.length = 0;
      this.tree = resp.tree;
      return resp.tree;
    });
  }

  /** Clicking a node starts a new walk from that document, params preserved. */
  reRoot(docId: string): Promise<TreeNode> {
    return this.enqueue(async () => {
      const start: WalkStart = { doc_id: docId };
      const resp = await this.walkFn(start, this.params);
      if (this.currentStart !== null) {
        this.backStack.push(this.currentStart);
      }
      this.currentStart = start;
      this.tree = resp.tree;
      return resp.tree;
    });
  }

  canGoBack(): boolean {
    return this.backStack.length > 0;
  }

  back(): Promise<TreeNode> {
    return this.enqueue(async () => {
      const previous = this.backStack.pop();
      if (previous === undefined) {
        throw new Error("back stack is empty");
      }
      const resp = await this.walkFn(previous, this.params);
      this.currentStart = previous;
      this.tree = resp.tree;
      return resp.tree;
    });
  }

  current(): TreeNode | null {
    return this.tree;
  }

  start(): WalkStart | null {
    return this.currentStart;
  }

  nodeCount(): number {
    if (this.tree === null) return 0;
    let count = 0;
    const stack = [this.tree];
    while (stack.length > 0) {
      const node = stack.pop()!;
      count += 1;
      stack.push(...node.children);
    }
    return count;
  }

  /** Structural ceiling: 1 + C + C^2 + ... + C^(L-1). */
  geometricBound(): number {
    let bound = 0;
    for (let i = 0; i < this.params.layers; i++) {
      bound += this.params.children ** i;
    }
    return bound;
  }

  /** Breadth-first flattening, children in sampling order, capped for
   * rendering. `truncated` drives the "expand more" affordance. */
  layout(cap: number = RENDER_CAP): { nodes: LayoutNode[]; truncated: boolean } {
    if (this.tree === null) return { nodes: [], truncated: false };
    const nodes: LayoutNode[] = [];
    const queue: { node: TreeNode; depth: number; parent: number }[] = [
      { node: this.tree, depth: 0, parent: -1 },
    ];
    let truncated = false;
    while (queue.length > 0) {
      const { node, depth, parent } = queue.shift()!;
      if (nodes.length >= cap) {
        truncated = true;
        break;
      }
      const index = nodes.length;
      nodes.push({ docId: node.doc_id, depth, parent });
      for (const child of node.children) {
        queue.push({ node: child, depth: depth + 1, parent: index });
      }
    }
    return { nodes, truncated };
  }
}
