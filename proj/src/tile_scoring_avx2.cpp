// Built with -mavx2 and only called when the CPU supports it.
#define KGE_TILE_ISA avx2
#include "tile_scoring.inc"
