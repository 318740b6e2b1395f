def main():
    import runez

    from wk_stationarity.cli import main

    runez.click.protected_main(main)


if __name__ == "__main__":
    main()
