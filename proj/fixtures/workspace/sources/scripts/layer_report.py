from boardsim import open_design, get_layer_names, get_layer


def describe_layers(path):
    design = open_design(path)
    rows = []
    for name in get_layer_names(design):
        layer = get_layer(design, name)
        rows.append((name, layer.kind, layer.thickness))
    return rows


if __name__ == "__main__":
    for name, kind, thickness in describe_layers("board.brd"):
        print(f"{name:12} {kind:8} {thickness:6.1f} um")
