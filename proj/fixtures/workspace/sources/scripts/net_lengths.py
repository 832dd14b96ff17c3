from boardsim import open_design, get_nets, map_reduce


def net_length(net):
    return {net.name: net.length}


def merge(a, b):
    merged = dict(a)
    merged.update(b)
    return merged


def longest_nets(path, n=10):
    design = open_design(path)
    lengths = map_reduce(get_nets(design), net_length, merge, workers=4)
    return sorted(lengths.items(), key=lambda kv: kv[1], reverse=True)[:n]


if __name__ == "__main__":
    for name, length in longest_nets("board.brd"):
        print(f"{name:20} {length:8.2f} mm")
