// Stand-in for an external decoder. A "video" is a text file holding
// `width height fps frames [bad_frame ...]`; frame i is filled with byte
// value i % 256, except bad frames, which are truncated to end the stream.
//
//   fake_decoder probe <file>   -> "width,height,fps,frames"
//   fake_decoder decode <file>  -> raw rgb24 frames on stdout

#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    if (argc != 3) return 2;
    const std::string mode = argv[1];
    std::ifstream in(argv[2]);
    int w = 0, h = 0, frames = 0;
    std::string fps;
    if (!(in >> w >> h >> fps >> frames)) return 3;
    std::set<int> bad;
    for (int b; in >> b;) bad.insert(b);

    if (mode == "probe") {
        std::printf("%d,%d,%s,%d\n", w, h, fps.c_str(), frames);
        return 0;
    }
    if (mode != "decode") return 2;
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
    for (int i = 0; i < frames; ++i) {
        std::fill(buf.begin(), buf.end(), static_cast<unsigned char>(i % 256));
        if (bad.count(i)) {
            std::fwrite(buf.data(), 1, buf.size() / 2, stdout);
            return 1;
        }
        std::fwrite(buf.data(), 1, buf.size(), stdout);
    }
    return 0;
}
