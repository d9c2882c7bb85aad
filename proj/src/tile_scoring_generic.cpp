#define KGE_TILE_ISA generic
#include "tile_scoring.inc"
