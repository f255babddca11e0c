#ifndef HCG_PARALLEL_HPP_INCLUDED
#define HCG_PARALLEL_HPP_INCLUDED

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hcg
{
/// Worker count from HCG_THREADS, defaulting to the hardware concurrency.
inline unsigned default_thread_count()
{
    if (const char* env = std::getenv("HCG_THREADS"))
    {
        try
        {
            const long v = std::stol(env);
            if (v >= 1)
                return static_cast<unsigned>(v);
        }
        catch (const std::exception&)
        {}
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, count); worker t takes the indices congruent to
/// t modulo `threads`. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body)
{
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::exception_ptr       error;
    std::mutex               error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
    {
        pool.emplace_back([&, t] {
            try
            {
                for (std::size_t i = t; i < count; i += threads)
                    body(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace hcg

#endif // HCG_PARALLEL_HPP_INCLUDED
