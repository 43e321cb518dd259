#include "ksadi/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ksadi {

void parallel_for(int count, int threads, const std::function<void(int, int)>& body)
{
    if (count <= 0)
        return;
    const int workers = std::min(threads, count);
    if (workers <= 1) {
        body(0, count);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int begin = static_cast<int>(static_cast<long long>(count) * w / workers);
        const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

}  // namespace ksadi
