from boardsim import open_design, move_component, get_nets, route_net, get_unrouted_nets, save_design


def move_and_reroute(path, ref, x, y):
    design = open_design(path)
    move_component(design, ref, x, y)
    for net in get_nets(design):
        if ref in {pin.split(".")[0] for pin in net.pins}:
            route_net(design, net.name)
    left = get_unrouted_nets(design)
    if not left:
        save_design(design)
    return left


if __name__ == "__main__":
    print(move_and_reroute("board.brd", "U7", 42.0, 18.5))
