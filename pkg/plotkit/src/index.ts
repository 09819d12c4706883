export { render, FIGURE_IDS } from "./figures.js";
export type { FigureSpec, FigureId } from "./figures.js";
export { loadCsv, numericColumn } from "./csv.js";
