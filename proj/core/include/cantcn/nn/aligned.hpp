#pragma once

#include <cstddef>
#include <new>
#include <vector>

namespace cantcn::nn {

/// Cache-line aligned storage. Vectorized kernels split loops at alignment
/// boundaries, so buffers whose address alignment varied from run to run
/// would also vary the floating-point summation order.
template <typename T>
struct AlignedAllocator
{
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

} // namespace cantcn::nn
