from dotenv import load_dotenv

# Load .env before the settings are first read
load_dotenv("./.env")

from querylab.cli import app

if __name__ == "__main__":
    app()
