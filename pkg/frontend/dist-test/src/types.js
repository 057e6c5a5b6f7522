"use strict";
/** Wire formats exchanged with the scoring service. */
Object.defineProperty(exports, "__esModule", { value: true });
exports.BLOOM_ORDER = void 0;
exports.bloomOrdinal = bloomOrdinal;
exports.BLOOM_ORDER = [
    "Remember",
    "Understand",
    "Apply",
    "Analyze",
    "Evaluate",
    "Create",
];
function bloomOrdinal(name) {
    return exports.BLOOM_ORDER.indexOf(name) + 1;
}
