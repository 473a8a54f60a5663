/* Flush-to-zero / denormals-are-zero around a kernel call (x86 SSE only). */
#ifndef SHOCKSTAB_FTZ_H
#define SHOCKSTAB_FTZ_H
#if defined(__SSE2__) || defined(_M_X64)
#include <xmmintrin.h>
static inline unsigned int ftz_enter(void) {
    unsigned int old = _mm_getcsr();
    _mm_setcsr(old | 0x8040u);
    return old;
}
static inline void ftz_leave(unsigned int old) { _mm_setcsr(old); }
#else
static inline unsigned int ftz_enter(void) { return 0u; }
static inline void ftz_leave(unsigned int old) { (void)old; }
#endif
#endif
